#pragma once

#include <fleetgp/envs/cart_pole.hpp>
#include <fleetgp/envs/mountain_car.hpp>
#include <fleetgp/envs/wind_farm.hpp>

#include <json.hpp>

#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fleetgp::harness {

using json = nlohmann::ordered_json;

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class TargetType { single, joint, fleet };

inline std::string to_string(TargetType t)
{
    switch (t) {
    case TargetType::single: return "single";
    case TargetType::joint: return "joint";
    case TargetType::fleet: return "fleet";
    }
    return "unknown";
}

inline TargetType parse_target_type(const std::string& s)
{
    if (s == "single")
        return TargetType::single;
    if (s == "joint")
        return TargetType::joint;
    if (s == "fleet")
        return TargetType::fleet;
    throw ConfigError("unknown target type '" + s + "' (expected single, joint or fleet)");
}

/// Forced fleet parameters used to check the fleet model against the baselines.
enum class FleetDiagnostic { none, zero_cross_weights, perfect_correlation };

inline std::string to_string(FleetDiagnostic d)
{
    switch (d) {
    case FleetDiagnostic::none: return "none";
    case FleetDiagnostic::zero_cross_weights: return "zero_cross_weights";
    case FleetDiagnostic::perfect_correlation: return "perfect_correlation";
    }
    return "unknown";
}

inline FleetDiagnostic parse_diagnostic(const std::string& s)
{
    if (s == "none")
        return FleetDiagnostic::none;
    if (s == "zero_cross_weights")
        return FleetDiagnostic::zero_cross_weights;
    if (s == "perfect_correlation")
        return FleetDiagnostic::perfect_correlation;
    throw ConfigError("unknown diagnostic '" + s + "'");
}

struct MemberConfig {
    std::string name;
    double parameter = 0.0; // power, pole mass or generator efficiency
    int samples = 0;
};

/// Replaces one member's parameter by each value in turn.
struct SweepConfig {
    int member = 0;
    std::vector<double> values;
};

struct ExperimentConfig {
    std::string name;
    std::string environment;
    std::vector<MemberConfig> members;
    int target = 0;
    std::vector<TargetType> target_types{TargetType::single, TargetType::joint, TargetType::fleet};
    double gamma = 0.99;
    int support_points = 200;
    std::optional<double> reward_sigma; // environment default when absent
    int runs = 1;
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> seeds; // one per run; seed + r when empty
    int horizon = 200;
    int jobs = 1;

    int transition_restarts = 5;
    double transition_lengthscale = 1.0;
    double transition_noise = gp::kDeterministicNoise;
    bool transition_differences = false; // regress s' - s instead of s'

    double tol = 1e-3;
    int max_iters = 50;
    int value_restarts = 3;
    int value_refit_restarts = 1;
    int improvement_starts = 16;
    std::optional<double> value_signal_variance; // evidence-fitted when absent
    gprl::ValuePrior value_prior = gprl::ValuePrior::support_mean;

    int value_grid = 50;
    FleetDiagnostic diagnostic = FleetDiagnostic::none;
    envs::WakeSurrogate wake{};
    std::optional<SweepConfig> sweep;

    int member_count() const { return static_cast<int>(members.size()); }

    std::uint64_t run_seed(int r) const
    {
        return seeds.empty() ? seed + static_cast<std::uint64_t>(r) : seeds.at(static_cast<std::size_t>(r));
    }

    void validate() const
    {
        const auto check = [](bool ok, const std::string& msg) {
            if (!ok)
                throw ConfigError(msg);
        };
        check(environment == "mountain_car" || environment == "cart_pole" || environment == "wind_farm",
              "environment must be mountain_car, cart_pole or wind_farm");
        check(!members.empty(), "fleet needs at least one member");
        check(target >= 0 && target < member_count(), "target id out of range");
        for (const auto& m : members) {
            check(m.parameter > 0.0 && std::isfinite(m.parameter), "member parameter must be positive: " + m.name);
            check(m.samples >= 1, "member samples must be >= 1: " + m.name);
        }
        check(!target_types.empty(), "at least one target type is required");
        check(gamma >= 0.0 && gamma < 1.0, "gamma must lie in [0, 1)");
        check(support_points >= 2, "support_points must be >= 2");
        check(!reward_sigma || *reward_sigma > 0.0, "reward_sigma must be positive");
        check(runs >= 1, "runs must be >= 1");
        check(seeds.empty() || static_cast<int>(seeds.size()) == runs, "seeds must list one seed per run");
        check(horizon >= 1, "horizon must be >= 1");
        check(jobs >= 1, "jobs must be >= 1");
        check(transition_restarts >= 1 && value_restarts >= 1 && value_refit_restarts >= 1, "restarts must be >= 1");
        check(transition_lengthscale > 0.0 && transition_noise > 0.0, "transition lengthscale and noise must be positive");
        check(tol > 0.0 && max_iters >= 1, "tol must be positive and max_iters >= 1");
        check(improvement_starts >= 1, "improvement_starts must be >= 1");
        check(!value_signal_variance || *value_signal_variance > 0.0, "value_signal_variance must be positive");
        check(value_grid >= 2, "value_grid must be >= 2");
        check(diagnostic != FleetDiagnostic::perfect_correlation || member_count() == 2,
              "perfect_correlation diagnostic needs exactly two members");
        if (sweep) {
            check(sweep->member >= 0 && sweep->member < member_count(), "sweep member out of range");
            check(!sweep->values.empty(), "sweep needs at least one value");
        }
    }
};

inline std::string member_parameter_key(const std::string& environment)
{
    if (environment == "mountain_car")
        return "power";
    if (environment == "cart_pole")
        return "pole_mass";
    if (environment == "wind_farm")
        return "efficiency";
    throw ConfigError("unknown environment '" + environment + "'");
}

inline json wake_to_json(const envs::WakeSurrogate& w)
{
    return json{{"rated_mw", w.rated_mw},         {"spacing_m", w.spacing_m},       {"max_deficit", w.max_deficit},
                {"deflection_gain", w.deflection_gain}, {"wake_width_m", w.wake_width_m}, {"min_power_mw", w.min_power_mw},
                {"max_power_mw", w.max_power_mw}, {"max_yaw_deg", w.max_yaw_deg}};
}

inline envs::WakeSurrogate wake_from_json(const json& j)
{
    envs::WakeSurrogate w;
    w.rated_mw = j.value("rated_mw", w.rated_mw);
    w.spacing_m = j.value("spacing_m", w.spacing_m);
    w.max_deficit = j.value("max_deficit", w.max_deficit);
    w.deflection_gain = j.value("deflection_gain", w.deflection_gain);
    w.wake_width_m = j.value("wake_width_m", w.wake_width_m);
    w.min_power_mw = j.value("min_power_mw", w.min_power_mw);
    w.max_power_mw = j.value("max_power_mw", w.max_power_mw);
    w.max_yaw_deg = j.value("max_yaw_deg", w.max_yaw_deg);
    return w;
}

inline json to_json(const ExperimentConfig& c)
{
    const std::string key = member_parameter_key(c.environment);
    json members = json::array();
    for (const auto& m : c.members)
        members.push_back(json{{"name", m.name}, {key, m.parameter}, {"samples", m.samples}});
    json types = json::array();
    for (auto t : c.target_types)
        types.push_back(to_string(t));
    json j{{"name", c.name},
           {"environment", c.environment},
           {"members", members},
           {"target", c.target},
           {"target_types", types},
           {"gamma", c.gamma},
           {"support_points", c.support_points}};
    if (c.reward_sigma)
        j["reward_sigma"] = *c.reward_sigma;
    j["runs"] = c.runs;
    j["seed"] = c.seed;
    if (!c.seeds.empty())
        j["seeds"] = c.seeds;
    j["horizon"] = c.horizon;
    j["jobs"] = c.jobs;
    j["transition"] = {{"restarts", c.transition_restarts}, {"initial_lengthscale", c.transition_lengthscale}, {"noise", c.transition_noise},
                       {"targets", c.transition_differences ? "difference" : "next_state"}};
    j["policy_iteration"] = {{"tol", c.tol},
                             {"max_iters", c.max_iters},
                             {"value_restarts", c.value_restarts},
                             {"value_refit_restarts", c.value_refit_restarts},
                             {"improvement_starts", c.improvement_starts},
                             {"value_signal_variance", c.value_signal_variance ? json(*c.value_signal_variance) : json("fit")},
                             {"value_prior", c.value_prior == gprl::ValuePrior::support_mean ? "support_mean" : "zero"}};
    j["value_grid"] = c.value_grid;
    j["diagnostic"] = to_string(c.diagnostic);
    if (c.environment == "wind_farm")
        j["wake"] = wake_to_json(c.wake);
    if (c.sweep)
        j["sweep"] = {{"member", c.sweep->member}, {"values", c.sweep->values}};
    return j;
}

inline ExperimentConfig config_from_json(const json& j)
{
    try {
        ExperimentConfig c;
        c.name = j.value("name", std::string{});
        c.environment = j.at("environment").get<std::string>();
        const std::string key = member_parameter_key(c.environment);
        for (const auto& m : j.at("members"))
            c.members.push_back({m.value("name", std::string{}), m.at(key).get<double>(), m.at("samples").get<int>()});
        c.target = j.at("target").get<int>();
        if (j.contains("target_types")) {
            c.target_types.clear();
            for (const auto& t : j.at("target_types"))
                c.target_types.push_back(parse_target_type(t.get<std::string>()));
        }
        c.gamma = j.value("gamma", c.gamma);
        c.support_points = j.value("support_points", c.support_points);
        if (j.contains("reward_sigma"))
            c.reward_sigma = j.at("reward_sigma").get<double>();
        c.runs = j.value("runs", c.runs);
        c.seed = j.value("seed", c.seed);
        if (j.contains("seeds"))
            c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        c.horizon = j.value("horizon", c.horizon);
        c.jobs = j.value("jobs", c.jobs);
        if (j.contains("transition")) {
            const auto& t = j.at("transition");
            c.transition_restarts = t.value("restarts", c.transition_restarts);
            c.transition_lengthscale = t.value("initial_lengthscale", c.transition_lengthscale);
            c.transition_noise = t.value("noise", c.transition_noise);
            const std::string targets = t.value("targets", std::string("next_state"));
            if (targets != "difference" && targets != "next_state")
                throw ConfigError("transition targets must be difference or next_state");
            c.transition_differences = targets == "difference";
        }
        if (j.contains("policy_iteration")) {
            const auto& p = j.at("policy_iteration");
            c.tol = p.value("tol", c.tol);
            c.max_iters = p.value("max_iters", c.max_iters);
            c.value_restarts = p.value("value_restarts", c.value_restarts);
            c.value_refit_restarts = p.value("value_refit_restarts", c.value_refit_restarts);
            c.improvement_starts = p.value("improvement_starts", c.improvement_starts);
            if (p.contains("value_signal_variance")) {
                const auto& sv = p.at("value_signal_variance");
                if (sv.is_string() && sv.get<std::string>() == "fit")
                    c.value_signal_variance.reset();
                else if (sv.is_number())
                    c.value_signal_variance = sv.get<double>();
                else
                    throw ConfigError("value_signal_variance must be a number or \"fit\"");
            }
            const std::string prior = p.value("value_prior", std::string("support_mean"));
            if (prior != "support_mean" && prior != "zero")
                throw ConfigError("value_prior must be support_mean or zero");
            c.value_prior = prior == "zero" ? gprl::ValuePrior::zero : gprl::ValuePrior::support_mean;
        }
        c.value_grid = j.value("value_grid", c.value_grid);
        c.diagnostic = parse_diagnostic(j.value("diagnostic", std::string("none")));
        if (j.contains("wake"))
            c.wake = wake_from_json(j.at("wake"));
        if (j.contains("sweep"))
            c.sweep = SweepConfig{j.at("sweep").at("member").get<int>(), j.at("sweep").at("values").get<std::vector<double>>()};
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
}

inline ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    try {
        return config_from_json(json::parse(in, nullptr, true, true));
    } catch (const json::parse_error& e) {
        throw ConfigError("cannot parse config file '" + path + "': " + e.what());
    }
}

/// One config per sweep value with the swept member's parameter replaced;
/// the config itself when no sweep is set.
inline std::vector<ExperimentConfig> expand_sweep(const ExperimentConfig& c)
{
    if (!c.sweep)
        return {c};
    std::vector<ExperimentConfig> out;
    for (std::size_t i = 0; i < c.sweep->values.size(); ++i) {
        ExperimentConfig v = c;
        v.sweep.reset();
        v.members[static_cast<std::size_t>(c.sweep->member)].parameter = c.sweep->values[i];
        v.name = c.name + "_" + std::to_string(i);
        v.validate();
        out.push_back(std::move(v));
    }
    return out;
}

/// Fleet member `m` of the configured environment.
inline std::unique_ptr<envs::Environment> make_environment(const ExperimentConfig& c, int m)
{
    const double p = c.members.at(static_cast<std::size_t>(m)).parameter;
    if (c.environment == "mountain_car")
        return std::make_unique<envs::MountainCar>(p);
    if (c.environment == "cart_pole")
        return std::make_unique<envs::CartPole>(p);
    if (c.environment == "wind_farm")
        return std::make_unique<envs::WindFarmRow>(p, c.wake);
    throw ConfigError("unknown environment '" + c.environment + "'");
}

} // namespace fleetgp::harness
