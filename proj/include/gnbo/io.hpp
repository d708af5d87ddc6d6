#pragma once

// CSV traces and summaries, plot data and JSON run manifests.

#include <gnbo/harness.hpp>

#include <json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace gnbo {

namespace fs = std::filesystem;

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
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
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw InvalidArgument("cannot parse number '" + s + "'");
    return v;
}

inline std::string trace_filename(const RunConfig& cfg)
{
    return cfg.problem + "_" + to_string(cfg.acquisition) + "_" + std::to_string(cfg.seed) + ".csv";
}

inline std::string trace_header(std::size_t d)
{
    std::string h = "iteration,seed,best_f,y,acq_value";
    for (std::size_t j = 0; j < d; ++j)
        h += ",x_" + std::to_string(j);
    return h + ",status,wall_ms";
}

inline void write_trace_csv(std::ostream& os, const Trace& trace)
{
    const std::size_t d = trace.config.dim;
    os << trace_header(d) << '\n';
    for (const auto& r : trace.records) {
        os << r.iteration << ',' << trace.config.cfg.seed << ',' << format_double(r.best_f) << ',' << format_double(r.y)
           << ',' << format_double(r.acq_value);
        for (Eigen::Index j = 0; j < r.x.size(); ++j)
            os << ',' << format_double(r.x[j]);
        std::string status = r.status;
        std::replace(status.begin(), status.end(), ',', ';');
        std::replace(status.begin(), status.end(), '\n', ' ');
        os << ',' << status << ',' << format_double(r.wall_ms) << '\n';
    }
}

namespace detail {
    inline std::vector<std::string> split_csv_line(const std::string& line)
    {
        std::vector<std::string> out;
        std::string cell;
        std::istringstream is(line);
        while (std::getline(is, cell, ','))
            out.push_back(cell);
        if (!line.empty() && line.back() == ',')
            out.emplace_back();
        return out;
    }

    inline std::ofstream open_for_write(const fs::path& path)
    {
        if (path.has_parent_path())
            fs::create_directories(path.parent_path());
        std::ofstream os(path, std::ios::binary);
        if (!os)
            throw Error("cannot open '" + path.string() + "' for writing");
        return os;
    }
} // namespace detail

/// Parsed rows of a trace CSV (x and scalar columns; gradients are not stored).
struct ParsedTrace {
    std::size_t dim = 0;
    std::vector<TraceRecord> records;

    std::vector<double> best_f() const
    {
        std::vector<double> v;
        for (const auto& r : records)
            v.push_back(r.best_f);
        return v;
    }
};

inline ParsedTrace read_trace_csv(std::istream& is)
{
    ParsedTrace out;
    std::string line;
    if (!std::getline(is, line))
        throw InvalidArgument("read_trace_csv: missing header");
    const auto header = detail::split_csv_line(line);
    if (header.size() < 7 || header[0] != "iteration")
        throw InvalidArgument("read_trace_csv: unexpected header");
    out.dim = header.size() - 7;
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw InvalidArgument("read_trace_csv: ragged row");
        TraceRecord r;
        r.iteration = std::stoul(cells[0]);
        r.best_f = parse_double(cells[2]);
        r.y = parse_double(cells[3]);
        r.acq_value = parse_double(cells[4]);
        r.x.resize(static_cast<Eigen::Index>(out.dim));
        for (std::size_t j = 0; j < out.dim; ++j)
            r.x[static_cast<Eigen::Index>(j)] = parse_double(cells[5 + j]);
        r.status = cells[5 + out.dim];
        r.wall_ms = parse_double(cells[6 + out.dim]);
        out.records.push_back(std::move(r));
    }
    return out;
}

inline fs::path write_trace(const fs::path& dir, const Trace& trace)
{
    const fs::path path = dir / trace_filename(trace.config.cfg);
    auto os = detail::open_for_write(path);
    write_trace_csv(os, trace);
    if (!os)
        throw Error("write failed: " + path.string());
    return path;
}

inline void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows)
{
    os << "iteration,method,mean_best_f,stderr,n_seeds\n";
    for (const auto& r : rows)
        os << r.iteration << ',' << r.method << ',' << format_double(r.mean_best_f) << ','
           << format_double(r.stderr_best_f) << ',' << r.n_seeds << '\n';
}

/// Whitespace-separated columns: iteration, then mean and stderr per method.
inline void write_plot_data(std::ostream& os, const std::vector<SummaryRow>& rows)
{
    std::vector<std::string> methods;
    std::map<std::size_t, std::map<std::string, const SummaryRow*>> table;
    for (const auto& r : rows) {
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end())
            methods.push_back(r.method);
        table[r.iteration][r.method] = &r;
    }
    os << "# iteration";
    for (const auto& m : methods)
        os << ' ' << m << "_mean " << m << "_stderr";
    os << '\n';
    for (const auto& [it, cols] : table) {
        os << it;
        for (const auto& m : methods) {
            const auto f = cols.find(m);
            if (f == cols.end())
                os << " nan nan";
            else
                os << ' ' << format_double(f->second->mean_best_f) << ' ' << format_double(f->second->stderr_best_f);
        }
        os << '\n';
    }
}

inline std::vector<fs::path> write_summary(const fs::path& dir, const std::string& problem,
                                           const std::vector<SummaryRow>& rows)
{
    const fs::path csv = dir / ("summary_" + problem + ".csv");
    const fs::path dat = dir / ("plot_" + problem + ".dat");
    {
        auto os = detail::open_for_write(csv);
        write_summary_csv(os, rows);
    }
    {
        auto os = detail::open_for_write(dat);
        write_plot_data(os, rows);
    }
    return {csv, dat};
}

// ---- manifests -------------------------------------------------------------

inline nlohmann::json to_json(const RunConfig& c)
{
    return {
        {"problem", c.problem},
        {"acquisition", to_string(c.acquisition)},
        {"alpha", c.alpha},
        {"budget", c.budget ? nlohmann::json(*c.budget) : nlohmann::json()},
        {"n_init", c.n_init ? nlohmann::json(*c.n_init) : nlohmann::json()},
        {"seed", c.seed},
        {"raw_samples", c.raw_samples},
        {"num_restarts", c.num_restarts},
        {"table1_literal", c.table_literal},
        {"incumbent_rule", to_string(c.incumbent_rule)},
        {"rescale", to_string(c.rescale)},
        {"fit_restarts", c.fit_restarts},
        {"ts_candidates", c.ts_candidates},
        {"max_refine_iters", c.max_refine_iters},
        {"output_dir", c.output_dir},
    };
}

inline RunConfig run_config_from_json(const nlohmann::json& j)
{
    RunConfig c;
    c.problem = j.value("problem", c.problem);
    if (j.contains("acquisition"))
        c.acquisition = parse_method(j.at("acquisition").get<std::string>());
    c.alpha = j.value("alpha", c.alpha);
    if (j.contains("budget") && !j.at("budget").is_null())
        c.budget = j.at("budget").get<std::size_t>();
    if (j.contains("n_init") && !j.at("n_init").is_null())
        c.n_init = j.at("n_init").get<std::size_t>();
    c.seed = j.value("seed", c.seed);
    c.raw_samples = j.value("raw_samples", c.raw_samples);
    c.num_restarts = j.value("num_restarts", c.num_restarts);
    c.table_literal = j.value("table1_literal", c.table_literal);
    if (j.contains("incumbent_rule"))
        c.incumbent_rule = parse_incumbent_rule(j.at("incumbent_rule").get<std::string>());
    if (j.contains("rescale"))
        c.rescale = parse_rescale(j.at("rescale").get<std::string>());
    c.fit_restarts = j.value("fit_restarts", c.fit_restarts);
    c.ts_candidates = j.value("ts_candidates", c.ts_candidates);
    c.max_refine_iters = j.value("max_refine_iters", c.max_refine_iters);
    c.output_dir = j.value("output_dir", c.output_dir);
    return c;
}

/// Manifest for one or more runs. Configs are stored resolved, so a replay
/// does not depend on problem defaults at replay time.
inline nlohmann::json make_manifest(const std::vector<const Trace*>& traces)
{
    nlohmann::json runs = nlohmann::json::array();
    nlohmann::json seeds = nlohmann::json::array();
    for (const Trace* t : traces) {
        nlohmann::json r = to_json(t->config.cfg);
        r["trace_file"] = trace_filename(t->config.cfg);
        r["complete"] = t->complete();
        if (!t->complete())
            r["error"] = t->error;
        runs.push_back(std::move(r));
        seeds.push_back(t->config.cfg.seed);
    }
    return {{"library", "gnbo"}, {"version", kVersion}, {"seeds", seeds}, {"runs", runs}};
}

inline fs::path write_manifest(const fs::path& path, const nlohmann::json& manifest)
{
    auto os = detail::open_for_write(path);
    os << manifest.dump(2) << '\n';
    return path;
}

inline nlohmann::json read_manifest(const fs::path& path)
{
    std::ifstream is(path);
    if (!is)
        throw Error("cannot open manifest '" + path.string() + "'");
    try {
        return nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument("malformed manifest '" + path.string() + "': " + e.what());
    }
}

inline std::vector<RunConfig> manifest_configs(const nlohmann::json& manifest)
{
    if (!manifest.contains("runs") || !manifest.at("runs").is_array())
        throw InvalidArgument("manifest has no runs array");
    std::vector<RunConfig> out;
    for (const auto& r : manifest.at("runs"))
        out.push_back(run_config_from_json(r));
    return out;
}

/// Re-run every configuration in a manifest and write trace CSVs into `dir`.
inline std::vector<fs::path> replay_manifest(const nlohmann::json& manifest, const fs::path& dir)
{
    std::vector<fs::path> paths;
    for (const auto& cfg : manifest_configs(manifest))
        paths.push_back(write_trace(dir, run_bo(cfg)));
    return paths;
}

} // namespace gnbo
