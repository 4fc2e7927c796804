#pragma once

#include <fleetgp/harness/experiment.hpp>

#include <algorithm>
#include <charconv>
#include <filesystem>

namespace fleetgp::harness {

namespace io_detail {

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double x)
{
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s)
{
    if (s == "nan")
        return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf")
        return std::numeric_limits<double>::infinity();
    if (s == "-inf")
        return -std::numeric_limits<double>::infinity();
    double x = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::runtime_error("not a number: '" + s + "'");
    return x;
}

template <typename T>
T parse_integer(const std::string& s)
{
    T x{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::runtime_error("not an integer: '" + s + "'");
    return x;
}

/// JSON has no NaN; non-finite values are stored as null.
inline json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }
inline double number(const json& j) { return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>(); }

inline json matrix_to_json(const Matrix& m)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k)
            row.push_back(m(i, k));
        rows.push_back(row);
    }
    return rows;
}

inline Matrix matrix_from_json(const json& j)
{
    const auto r = static_cast<Eigen::Index>(j.size());
    const auto c = r > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        if (static_cast<Eigen::Index>(j.at(i).size()) != c)
            throw std::runtime_error("ragged matrix");
        for (Eigen::Index k = 0; k < c; ++k)
            m(i, k) = j.at(i).at(k).get<double>();
    }
    return m;
}

inline std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(line);
    while (std::getline(in, cur, sep))
        out.push_back(cur);
    if (!line.empty() && line.back() == sep)
        out.emplace_back();
    return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
}

inline std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read '" + path.string() + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace io_detail

inline const char* kResultsHeader = "run_id,target_type,seed,metric,converged,wall_ms";

/// One row per run with the columns of `kResultsHeader`.
inline std::string results_to_csv(const std::vector<RunResult>& results)
{
    using io_detail::format_double;
    std::string out = std::string(kResultsHeader) + "\n";
    for (const auto& r : results)
        out += std::to_string(r.run_id) + "," + to_string(r.target_type) + "," + std::to_string(r.seed) + "," +
               format_double(r.metric) + "," + (r.converged ? "1" : "0") + "," + format_double(r.wall_ms) + "\n";
    return out;
}

/// Parses `results_to_csv` output. Only the CSV columns are restored; a row
/// with a finite metric is taken as successful.
inline std::vector<RunResult> results_from_csv(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kResultsHeader)
        throw std::runtime_error("results.csv: unexpected header");
    std::vector<RunResult> out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        const auto f = io_detail::split(line, ',');
        if (f.size() != 6)
            throw std::runtime_error("results.csv line " + std::to_string(lineno) + ": expected 6 fields");
        try {
            RunResult r;
            r.run_id = io_detail::parse_integer<int>(f[0]);
            r.target_type = parse_target_type(f[1]);
            r.seed = io_detail::parse_integer<std::uint64_t>(f[2]);
            r.metric = io_detail::parse_double(f[3]);
            if (f[4] != "0" && f[4] != "1")
                throw std::runtime_error("converged must be 0 or 1");
            r.converged = f[4] == "1";
            r.wall_ms = io_detail::parse_double(f[5]);
            r.ok = std::isfinite(r.metric);
            out.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw std::runtime_error("results.csv line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

inline json to_json(const RunResult& r)
{
    using io_detail::number;
    json corr = json::array();
    for (const auto& m : r.correlations)
        corr.push_back(io_detail::matrix_to_json(m));
    return json{{"run_id", r.run_id},
                {"target_type", to_string(r.target_type)},
                {"seed", r.seed},
                {"ok", r.ok},
                {"error", r.error},
                {"metric", number(r.metric)},
                {"converged", r.converged},
                {"iterations", r.iterations},
                {"wall_ms", r.wall_ms},
                {"max_residual", number(r.max_residual)},
                {"max_row_sum", number(r.max_row_sum)},
                {"value_std", number(r.value_std)},
                {"final_state", r.final_state},
                {"max_abs_state", r.max_abs_state},
                {"correlations", corr}};
}

inline RunResult run_result_from_json(const json& j)
{
    using io_detail::number;
    RunResult r;
    r.run_id = j.at("run_id").get<int>();
    r.target_type = parse_target_type(j.at("target_type").get<std::string>());
    r.seed = j.at("seed").get<std::uint64_t>();
    r.ok = j.at("ok").get<bool>();
    r.error = j.at("error").get<std::string>();
    r.metric = number(j.at("metric"));
    r.converged = j.at("converged").get<bool>();
    r.iterations = j.at("iterations").get<int>();
    r.wall_ms = j.at("wall_ms").get<double>();
    r.max_residual = number(j.at("max_residual"));
    r.max_row_sum = number(j.at("max_row_sum"));
    r.value_std = number(j.at("value_std"));
    r.final_state = j.at("final_state").get<std::vector<double>>();
    r.max_abs_state = j.at("max_abs_state").get<std::vector<double>>();
    for (const auto& m : j.at("correlations"))
        r.correlations.push_back(io_detail::matrix_from_json(m));
    return r;
}

inline json runs_to_json(const std::vector<RunResult>& results)
{
    json a = json::array();
    for (const auto& r : results)
        a.push_back(to_json(r));
    return a;
}

inline std::vector<RunResult> runs_from_json(const json& j)
{
    std::vector<RunResult> out;
    for (const auto& r : j)
        out.push_back(run_result_from_json(r));
    return out;
}

/// Linear-interpolation quantile of sorted data, p in [0, 1].
inline double quantile(const std::vector<double>& sorted, double p)
{
    detail::require(!sorted.empty(), "quantile: empty sample");
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct TypeSummary {
    TargetType target_type = TargetType::single;
    int runs = 0;
    int successful = 0;
    int converged = 0;
    double median = std::numeric_limits<double>::quiet_NaN();
    double q1 = std::numeric_limits<double>::quiet_NaN();
    double q3 = std::numeric_limits<double>::quiet_NaN();
    double min = std::numeric_limits<double>::quiet_NaN();
    double max = std::numeric_limits<double>::quiet_NaN();

    bool operator==(const TypeSummary& o) const
    {
        using harness_detail::same;
        return target_type == o.target_type && runs == o.runs && successful == o.successful && converged == o.converged &&
               same(median, o.median) && same(q1, o.q1) && same(q3, o.q3) && same(min, o.min) && same(max, o.max);
    }
};

/// Metric statistics of the successful runs per target type, in order of
/// first appearance. Throws when no run succeeded.
inline std::vector<TypeSummary> summarize(const std::vector<RunResult>& results)
{
    std::vector<TypeSummary> out;
    std::vector<std::vector<double>> metrics;
    for (const auto& r : results) {
        auto it = std::find_if(out.begin(), out.end(), [&](const TypeSummary& s) { return s.target_type == r.target_type; });
        if (it == out.end()) {
            out.push_back({r.target_type});
            metrics.emplace_back();
            it = out.end() - 1;
        }
        auto& m = metrics[static_cast<std::size_t>(it - out.begin())];
        ++it->runs;
        if (r.ok && std::isfinite(r.metric)) {
            ++it->successful;
            it->converged += r.converged ? 1 : 0;
            m.push_back(r.metric);
        }
    }
    bool any = false;
    for (std::size_t i = 0; i < out.size(); ++i) {
        auto& m = metrics[i];
        if (m.empty())
            continue;
        any = true;
        std::sort(m.begin(), m.end());
        out[i].median = quantile(m, 0.5);
        out[i].q1 = quantile(m, 0.25);
        out[i].q3 = quantile(m, 0.75);
        out[i].min = m.front();
        out[i].max = m.back();
    }
    if (!any)
        throw std::runtime_error("summarize: no successful runs");
    return out;
}

inline const TypeSummary* find_summary(const std::vector<TypeSummary>& s, TargetType t)
{
    for (const auto& x : s)
        if (x.target_type == t)
            return &x;
    return nullptr;
}

inline json summary_to_json(const std::vector<TypeSummary>& summary)
{
    using io_detail::number;
    json a = json::array();
    for (const auto& s : summary)
        a.push_back(json{{"target_type", to_string(s.target_type)},
                         {"runs", s.runs},
                         {"successful", s.successful},
                         {"converged", s.converged},
                         {"median", number(s.median)},
                         {"q1", number(s.q1)},
                         {"q3", number(s.q3)},
                         {"min", number(s.min)},
                         {"max", number(s.max)}});
    return a;
}

inline std::vector<TypeSummary> summary_from_json(const json& j)
{
    using io_detail::number;
    std::vector<TypeSummary> out;
    for (const auto& s : j)
        out.push_back({parse_target_type(s.at("target_type").get<std::string>()), s.at("runs").get<int>(),
                       s.at("successful").get<int>(), s.at("converged").get<int>(), number(s.at("median")),
                       number(s.at("q1")), number(s.at("q3")), number(s.at("min")), number(s.at("max"))});
    return out;
}

inline std::string summary_to_csv(const std::vector<TypeSummary>& summary)
{
    using io_detail::format_double;
    std::string out = "target_type,runs,successful,converged,median,q1,q3,min,max\n";
    for (const auto& s : summary)
        out += to_string(s.target_type) + "," + std::to_string(s.runs) + "," + std::to_string(s.successful) + "," +
               std::to_string(s.converged) + "," + format_double(s.median) + "," + format_double(s.q1) + "," +
               format_double(s.q3) + "," + format_double(s.min) + "," + format_double(s.max) + "\n";
    return out;
}

/// Learned correlation matrices of dimension `dim` across the fleet runs,
/// with their element-wise mean.
inline json correlations_to_json(const std::vector<RunResult>& results, int dim, const std::vector<std::string>& members = {})
{
    json runs = json::array();
    Matrix sum;
    int n = 0;
    for (const auto& r : results) {
        if (!r.ok || static_cast<int>(r.correlations.size()) <= dim)
            continue;
        const Matrix& m = r.correlations[static_cast<std::size_t>(dim)];
        runs.push_back(json{{"run_id", r.run_id}, {"seed", r.seed}, {"matrix", io_detail::matrix_to_json(m)}});
        sum = n == 0 ? m : Matrix(sum + m);
        ++n;
    }
    json j{{"dimension", dim}, {"members", members}, {"runs", runs}};
    j["mean"] = n > 0 ? io_detail::matrix_to_json(sum / n) : json::array();
    return j;
}

/// Writes results.csv, runs.json, corr_<dim>.json, summary.json and summary.csv.
inline std::vector<TypeSummary> write_outputs(const std::filesystem::path& dir, const ExperimentConfig& c,
                                              const std::vector<RunResult>& results)
{
    std::filesystem::create_directories(dir);
    io_detail::write_text(dir / "results.csv", results_to_csv(results));
    io_detail::write_text(dir / "runs.json", runs_to_json(results).dump(2) + "\n");
    io_detail::write_text(dir / "config.json", to_json(c).dump(2) + "\n");
    std::size_t dims = 0;
    for (const auto& r : results)
        dims = std::max(dims, r.correlations.size());
    std::vector<std::string> names;
    for (const auto& m : c.members)
        names.push_back(m.name);
    for (std::size_t d = 0; d < dims; ++d)
        io_detail::write_text(dir / ("corr_" + std::to_string(d) + ".json"),
                              correlations_to_json(results, static_cast<int>(d), names).dump(2) + "\n");
    const auto summary = summarize(results);
    io_detail::write_text(dir / "summary.json", summary_to_json(summary).dump(2) + "\n");
    io_detail::write_text(dir / "summary.csv", summary_to_csv(summary));
    return summary;
}

/// Reads a run directory, preferring runs.json over results.csv.
inline std::vector<RunResult> read_results(const std::filesystem::path& dir)
{
    if (std::filesystem::exists(dir / "runs.json"))
        return runs_from_json(json::parse(io_detail::read_text(dir / "runs.json")));
    return results_from_csv(io_detail::read_text(dir / "results.csv"));
}

} // namespace fleetgp::harness
