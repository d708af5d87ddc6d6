// gnbo command-line driver.

#include <gnbo/figures.hpp>
#include <gnbo/io.hpp>
#include <gnbo/validate.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

using namespace gnbo;

struct Options {
    std::string problem = "hartmann6";
    std::string acq = "ei_gn";
    double alpha = 0.6;
    std::uint64_t seed = 0;
    std::optional<std::size_t> budget;
    std::optional<std::size_t> n_init;
    std::size_t raw_samples = 0;
    std::size_t num_restarts = 0;
    bool table1_literal = false;
    std::string incumbent = "g_incumbent";
    std::string rescale = "pool_zscore";
    int fit_restarts = 5;
    std::size_t ts_candidates = 0;
    int max_refine_iters = 100;
    std::string out = "results";

    RunConfig to_config() const
    {
        RunConfig c;
        c.problem = problem;
        c.acquisition = parse_method(acq);
        c.alpha = alpha;
        c.seed = seed;
        c.budget = budget;
        c.n_init = n_init;
        c.raw_samples = raw_samples;
        c.num_restarts = num_restarts;
        c.table_literal = table1_literal;
        c.incumbent_rule = parse_incumbent_rule(incumbent);
        c.rescale = parse_rescale(rescale);
        c.fit_restarts = fit_restarts;
        c.ts_candidates = ts_candidates;
        c.max_refine_iters = max_refine_iters;
        c.output_dir = out;
        return c;
    }
};

void require_problem(const std::string& name)
{
    if (!is_known_problem(name))
        throw UnknownProblem("unknown problem '" + name + "'");
}

void print_fallbacks(const Trace& t)
{
    std::size_t n = 0;
    for (const auto& r : t.records)
        n += r.status.rfind("fallback", 0) == 0;
    if (n > 0)
        std::cerr << "warning: " << n << " iteration(s) fell back to Sobol queries\n";
}

int cmd_run(const Options& o)
{
    require_problem(o.problem);
    const RunConfig cfg = o.to_config();
    const Trace trace = run_bo(cfg);
    const fs::path out = cfg.output_dir;
    const fs::path csv = write_trace(out, trace);
    const fs::path manifest = out / ("manifest_" + fs::path(csv).stem().string() + ".json");
    write_manifest(manifest, make_manifest({&trace}));
    print_fallbacks(trace);
    std::cout << csv.string() << '\n' << manifest.string() << '\n';
    if (!trace.complete()) {
        std::cerr << "error: " << trace.error << '\n';
        return 1;
    }
    std::cout << "best f: " << format_double(trace.records.back().best_f) << '\n';
    return 0;
}

int cmd_suite(const Options& o, const std::vector<std::string>& methods, std::size_t n_seeds, unsigned threads)
{
    require_problem(o.problem);
    if (methods.empty() || n_seeds == 0)
        throw InvalidArgument("suite needs at least one method and one seed");
    std::vector<RunConfig> cfgs;
    for (const auto& m : methods)
        for (std::size_t s = 0; s < n_seeds; ++s) {
            Options per = o;
            per.acq = m;
            per.seed = o.seed + s;
            cfgs.push_back(per.to_config());
        }
    const SuiteResult res = run_suite(cfgs, threads);
    const fs::path out = o.out;
    std::vector<const Trace*> ok;
    for (std::size_t i = 0; i < res.traces.size(); ++i)
        if (!res.traces[i].records.empty()) {
            write_trace(out, res.traces[i]);
            ok.push_back(&res.traces[i]);
        }
    const auto files = write_summary(out, o.problem, res.summary);
    write_manifest(out / ("manifest_suite_" + o.problem + ".json"), make_manifest(ok));
    for (const auto& f : files)
        std::cout << f.string() << '\n';
    for (const auto& f : res.failures)
        std::cerr << "failed: " << f << '\n';
    if (!res.failures.empty())
        std::cerr << res.failures.size() << " run(s) excluded from the summary\n";
    return res.failures.empty() ? 0 : 1;
}

int cmd_validate(std::size_t cases, std::size_t mc_n, std::uint64_t seed, const std::string& out_path, bool with_cases)
{
    std::vector<SweepResult> sweeps;
    sweeps.push_back(analytic_cases());
    sweeps.push_back(closed_form_sweep(cases, mc_n, seed));
    sweeps.push_back(alpha_zero_sweep(10000, seed));
    sweeps.push_back(positive_part_sweep(1000000, seed));
    sweeps.push_back(lower_bound_sweep(std::max<std::size_t>(cases / 2, 1), mc_n, seed));
    sweeps.push_back(event_bound_sweep(std::max<std::size_t>(cases / 2, 1), mc_n, seed));
    nlohmann::json report{{"version", kVersion}, {"seed", seed}, {"mc_n", mc_n}, {"sweeps", nlohmann::json::array()}};
    bool all = true;
    for (const auto& s : sweeps) {
        report["sweeps"].push_back(to_json(s, with_cases));
        all = all && s.ok();
    }
    report["ok"] = all;
    if (out_path.empty()) {
        std::cout << report.dump(2) << '\n';
    } else {
        write_manifest(out_path, report);
        for (const auto& s : sweeps)
            std::cout << (s.ok() ? "PASS " : "FAIL ") << s.name << ' ' << s.passed << '/' << s.total << '\n';
    }
    return all ? 0 : 1;
}

int cmd_profile(const std::string& problem_name, std::size_t n_design, std::uint64_t design_seed, std::size_t grid,
                double alpha, const std::string& out_path)
{
    require_problem(problem_name);
    const Problem p = make_problem(problem_name);
    const Dataset data = profile_design(p, n_design, design_seed);
    AcquisitionConfig acfg;
    acfg.alpha = alpha;
    const AcquisitionProfile prof = acquisition_profile(p, data, {"ei", "ei_gn"}, grid, acfg);
    if (out_path.empty() || out_path == "-") {
        write_profile_csv(std::cout, prof);
    } else {
        auto os = detail::open_for_write(out_path);
        write_profile_csv(os, prof);
        std::cout << out_path << '\n';
    }
    return 0;
}

int cmd_topk(const Options& o, std::size_t k)
{
    require_problem(o.problem);
    const RunConfig cfg = o.to_config();
    const Problem p = make_problem(cfg.problem);
    const TopSolutions top = emit_top_solutions(cfg, k);
    const fs::path path
        = fs::path(cfg.output_dir) / ("top" + std::to_string(k) + "_" + cfg.problem + "_" + o.acq + "_" + std::to_string(cfg.seed) + ".csv");
    auto os = detail::open_for_write(path);
    write_top_solutions_csv(os, top, p.dim);
    if (top.short_of_k)
        std::cerr << "warning: only " << top.points.size() << " distinct points\n";
    std::cout << path.string() << '\n';
    return 0;
}

int cmd_replay(const std::string& manifest, const std::string& out)
{
    const auto paths = replay_manifest(read_manifest(manifest), out);
    for (const auto& p : paths)
        std::cout << p.string() << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"gnbo: Bayesian optimization with gradient-norm aware expected improvement"};
    app.set_version_flag("--version", std::string(gnbo::kVersion));
    app.set_config("--config", "", "Flat key = value config file (keys mirror the long flags)");
    app.require_subcommand(1);
    app.fallthrough();

    Options o;
    app.add_option("--problem", o.problem, "Problem name (e.g. hartmann6, ackley14, holder, fig2mix, gp-within-7)");
    app.add_option("--acq", o.acq, "Acquisition: ei_gn, ei, log_ei, ts, sobol");
    app.add_option("--alpha", o.alpha, "Stationarity weight");
    app.add_option("--seed", o.seed, "Master seed (first seed for suites)");
    app.add_option("--budget", o.budget, "BO iterations after the initial design (default per problem)");
    app.add_option("--n-init", o.n_init, "Initial Sobol points (default per problem)");
    app.add_option("--raw-samples", o.raw_samples, "Raw pool size (0 = problem default)");
    app.add_option("--num-restarts", o.num_restarts, "Refinement restarts (0 = problem default)");
    app.add_flag("--table1-literal", o.table1_literal, "Use the raw/restart table columns as printed");
    app.add_option("--incumbent", o.incumbent, "g_incumbent or f_incumbent");
    app.add_option("--rescale", o.rescale, "pool_zscore or none");
    app.add_option("--fit-restarts", o.fit_restarts, "Hyperparameter optimization restarts per fit");
    app.add_option("--ts-candidates", o.ts_candidates, "Thompson candidate set size (0 = 1024 min(d, 8))");
    app.add_option("--max-refine-iters", o.max_refine_iters, "L-BFGS iterations per restart");
    app.add_option("--out", o.out, "Output directory or file");

    auto* run = app.add_subcommand("run", "Single BO run; writes a trace CSV and a manifest");

    auto* suite = app.add_subcommand("suite", "Multi-seed, multi-method runs with a summary");
    std::vector<std::string> methods{"ei_gn", "ei", "ts", "sobol"};
    std::size_t n_seeds = 20;
    unsigned threads = 1;
    suite->add_option("--methods", methods, "Methods to compare")->delimiter(',');
    suite->add_option("--seeds", n_seeds, "Number of seeds, starting at --seed");
    suite->add_option("--threads", threads, "Worker threads");

    auto* validate = app.add_subcommand("validate", "Closed-form vs Monte Carlo and bound sweeps");
    std::size_t cases = 200, mc_n = 1000000;
    bool with_cases = false;
    validate->add_option("--cases", cases, "Random configurations for the closed-form sweep");
    validate->add_option("--mc-n", mc_n, "Monte Carlo samples per case");
    validate->add_flag("--with-cases", with_cases, "Include per-case values in the report");

    auto* profile = app.add_subcommand("profile", "Acquisition profile on a 1-d problem");
    std::size_t n_design = 6, grid = 1001;
    std::uint64_t design_seed = 9;
    profile->add_option("--design-n", n_design, "Design size");
    profile->add_option("--design-seed", design_seed, "Design seed");
    profile->add_option("--grid", grid, "Grid points");

    auto* topk = app.add_subcommand("topk", "Top-k distinct queries of one BO run");
    std::size_t k = 5;
    topk->add_option("-k", k, "Number of solutions");

    auto* replay = app.add_subcommand("replay", "Re-run every configuration of a manifest");
    std::string manifest;
    replay->add_option("--manifest", manifest, "Manifest JSON")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run)
            return cmd_run(o);
        if (*suite)
            return cmd_suite(o, methods, n_seeds, threads);
        if (*validate)
            return cmd_validate(cases, mc_n, o.seed, o.out == "results" ? "" : o.out, with_cases);
        if (*profile) {
            const std::string prob = app.get_option("--problem")->count() > 0 ? o.problem : "fig2mix";
            return cmd_profile(prob, n_design, design_seed, grid, o.alpha, o.out == "results" ? "" : o.out);
        }
        if (*topk) {
            if (app.get_option("--problem")->count() == 0)
                o.problem = "holder";
            return cmd_topk(o, k);
        }
        if (*replay)
            return cmd_replay(manifest, o.out);
    } catch (const gnbo::UnknownProblem& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const gnbo::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
