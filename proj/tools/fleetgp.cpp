#include <fleetgp/harness/results.hpp>

#include "oracle_suites.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

using namespace fleetgp;
using namespace fleetgp::harness;

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kConfig = 3, kRuntime = 4, kOracleFailed = 5 };

int fail(ExitCode code, const std::string& kind, const std::string& message)
{
    const json record{{"error", {{"kind", kind}, {"message", message}, {"exit_code", static_cast<int>(code)}}}};
    std::cerr << record.dump() << std::endl;
    return code;
}

struct RunArgs {
    std::string config;
    std::optional<int> runs;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> target_type;
    std::optional<int> jobs;
    std::string out;
};

int run_command(const RunArgs& a)
{
    ExperimentConfig c = load_config(a.config);
    if (a.runs)
        c.runs = *a.runs;
    if (a.seed) {
        c.seed = *a.seed;
        c.seeds.clear();
    }
    if (a.target_type)
        c.target_types = {parse_target_type(*a.target_type)};
    if (a.jobs)
        c.jobs = *a.jobs;
    if (!c.seeds.empty() && static_cast<int>(c.seeds.size()) > c.runs)
        c.seeds.resize(static_cast<std::size_t>(c.runs));
    c.validate();

    const std::filesystem::path root = a.out.empty() ? std::filesystem::path("results") / c.name : std::filesystem::path(a.out);
    const auto variants = expand_sweep(c);
    json index = json::array();
    for (const auto& v : variants) {
        const auto dir = variants.size() == 1 ? root : root / v.name;
        std::mutex io;
        const auto results = run_experiment(v, [&](const RunResult& r) {
            std::lock_guard lock(io);
            std::cerr << v.name << ' ' << to_string(r.target_type) << " run " << r.run_id << " seed " << r.seed
                      << (r.ok ? " metric " + io_detail::format_double(r.metric) : " FAILED: " + r.error)
                      << " converged " << r.converged << ' ' << io_detail::format_double(r.wall_ms) << " ms" << std::endl;
        });
        const auto summary = write_outputs(dir, v, results);
        index.push_back({{"name", v.name}, {"dir", dir.string()}, {"summary", summary_to_json(summary)}});
    }
    std::cout << index.dump(2) << std::endl;
    return kOk;
}

int summarize_command(const std::string& in)
{
    const std::filesystem::path dir(in);
    if (!std::filesystem::is_directory(dir))
        throw std::runtime_error("no such result directory '" + in + "'");
    const auto summary = summarize(read_results(dir));
    io_detail::write_text(dir / "summary.json", summary_to_json(summary).dump(2) + "\n");
    io_detail::write_text(dir / "summary.csv", summary_to_csv(summary));
    std::cout << summary_to_csv(summary);
    return kOk;
}

int oracle_command(const std::string& suite)
{
    const auto& reg = suites::registry();
    std::vector<std::string> names;
    if (suite == "all") {
        for (const auto& [name, fn] : reg)
            names.push_back(name);
    } else if (reg.count(suite)) {
        names.push_back(suite);
    } else {
        std::string known;
        for (const auto& [name, fn] : reg)
            known += name + ", ";
        return fail(kUsage, "usage", "unknown suite '" + suite + "' (known: " + known + "all)");
    }
    json reports = json::array();
    bool pass = true;
    for (const auto& name : names) {
        const suites::Report r = reg.at(name)();
        for (const auto& c : r.checks)
            std::cerr << (c.pass ? "PASS " : "FAIL ") << name << ": " << c.name << " = " << io_detail::format_double(c.value)
                      << " (threshold " << io_detail::format_double(c.threshold) << ")" << (c.note.empty() ? "" : " " + c.note) << std::endl;
        pass = pass && r.pass();
        reports.push_back(suites::to_json(r));
    }
    std::cout << reports.dump(2) << std::endl;
    if (!pass)
        return fail(kOracleFailed, "oracle_failed", "at least one oracle check failed");
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Fleet GP policy iteration experiments"};
    app.require_subcommand(1);

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "Run an experiment config");
    run->add_option("--config", run_args.config, "Experiment config (JSON)")->required();
    run->add_option("--runs", run_args.runs, "Runs per target type")->check(CLI::PositiveNumber);
    run->add_option("--seed", run_args.seed, "Base seed; run r uses seed + r");
    run->add_option("--target-type", run_args.target_type, "Only this target type")->check(CLI::IsMember({"single", "joint", "fleet"}));
    run->add_option("--jobs", run_args.jobs, "Worker threads")->check(CLI::PositiveNumber);
    run->add_option("--out", run_args.out, "Output directory (default results/<name>)");

    std::string in;
    auto* summarize_cmd = app.add_subcommand("summarize", "Recompute summaries of a result directory");
    summarize_cmd->add_option("--in", in, "Result directory")->required();

    std::string suite;
    auto* oracle = app.add_subcommand("oracle", "Run a brute-force oracle suite");
    oracle->add_option("suite", suite, "gp, coreg, gprl, degeneracy or all")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(kUsage, "usage", e.what());
    }

    try {
        if (*run)
            return run_command(run_args);
        if (*summarize_cmd)
            return summarize_command(in);
        return oracle_command(suite);
    } catch (const ConfigError& e) {
        return fail(kConfig, "config", e.what());
    } catch (const std::exception& e) {
        return fail(kRuntime, "runtime", e.what());
    }
}
