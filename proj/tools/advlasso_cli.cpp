// advlasso command line: solve, attack, gradcheck, sweep.

#include "advlasso/experiments.hpp"
#include "advlasso/gradcheck.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace advlasso;

struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
};

int cmd_solve(const Common& c, const std::string& data_override)
{
    const Json j = c.config.empty() ? Json::object() : read_json(c.config);
    check_keys(j, {"data", "model", "barrier", "support_tol"}, "solve config");
    const fs::path base = c.config.empty() ? fs::path(".") : fs::path(c.config).parent_path();

    fs::path data_path;
    if (!data_override.empty()) data_path = data_override;
    else if (j.contains("data")) data_path = base / get_string(j, "data", "solve config");
    else throw ValueError("solve: give a dataset with --data or a 'data' entry in the config");

    const Dataset d = read_dataset_csv(data_path);
    const ModelSpec model = j.contains("model") ? model_from_json(j["model"], d.m()) : ModelSpec::lasso(1.0);
    model.check_dimension(d.m());
    const BarrierConfig barrier = j.contains("barrier") ? barrier_config_from_json(j["barrier"]) : BarrierConfig{};
    const double tol = get_number_or(j, "support_tol", 1e-6, "solve config");

    const SolverSolution s = solve(d, model, barrier);
    const FitMetrics fit = metrics(d.y(), d.X() * s.beta);
    Json report;
    report["generated_at"] = utc_timestamp();
    report["dimensions"] = {{"n", d.n()}, {"m", d.m()}};
    report["model"] = to_json(model);
    report["barrier"] = to_json(barrier);
    report["objective"] = model.objective(d, s.beta);
    report["kkt_residual"] = kkt_residual(model, d, s);
    report["t_final"] = s.t_final;
    report["newton_iters"] = s.newton_iters;
    report["fit"] = to_json(fit);
    report["support_tol"] = tol;
    report["support"] = to_json_1based(support(s.beta, tol));
    report["beta"] = to_json(s.beta);

    const fs::path out = c.out.empty() ? fs::path("out/solve") : fs::path(c.out);
    write_beta_csv(out / "beta.csv", s.beta);
    write_json(out / "solve_report.json", report);
    std::cout << "objective " << format_double(model.objective(d, s.beta)) << "\n"
              << "support size " << support(s.beta, tol).size() << " of " << d.m() << "\n"
              << "r2 " << format_double(fit.r2) << "  rmse " << format_double(fit.rmse) << "\n"
              << "wrote " << (out / "beta.csv").string() << " and " << (out / "solve_report.json").string()
              << "\n";
    return 0;
}

int cmd_attack(const Common& c)
{
    if (c.config.empty()) throw ValueError("attack: --config is required");
    ScenarioConfig cfg = load_scenario_config(c.config);
    if (c.seed) cfg.seed = *c.seed;
    const fs::path out = c.out.empty() ? fs::path("out") / cfg.name : fs::path(c.out);
    const ScenarioRun run = run_scenario(cfg, out);
    const auto& o = run.outcome;
    std::cout << "objective " << format_double(o.objective_before()) << " -> "
              << format_double(o.objective_after()) << " after " << o.result.iterations_used
              << " iterations" << (o.result.converged ? " (converged)" : "") << "\n";
    for (const auto& u : o.suppressed)
        std::cout << "suppress " << (u.unit + 1) << ": " << format_double(u.before) << " -> "
                  << format_double(u.after) << (u.in_support_after ? "" : " (left support)") << "\n";
    for (const auto& u : o.promoted)
        std::cout << "promote  " << (u.unit + 1) << ": " << format_double(u.before) << " -> "
                  << format_double(u.after) << (u.in_support_after ? " (entered support)" : "") << "\n";
    std::cout << "report " << run.report_path.string() << "\n";
    return 0;
}

int cmd_gradcheck(const Common& c)
{
    const Json j = c.config.empty() ? Json::object() : read_json(c.config);
    check_keys(j, {"model", "n", "m", "k_sparse", "sigma", "h", "tol", "barrier"}, "gradcheck config");
    const Index n = static_cast<Index>(get_int_or(j, "n", 10, "gradcheck config"));
    const Index m = static_cast<Index>(get_int_or(j, "m", 15, "gradcheck config"));
    const Index k = static_cast<Index>(get_int_or(j, "k_sparse", 5, "gradcheck config"));
    const double sigma = get_number_or(j, "sigma", 0.1, "gradcheck config");
    const double h = get_number_or(j, "h", 1e-5, "gradcheck config");
    const double tol = get_number_or(j, "tol", 1e-3, "gradcheck config");
    const std::uint64_t seed = c.seed.value_or(0);

    const auto g = gen_synthetic(n, m, k, sigma, seed);
    const ModelSpec model =
        j.contains("model") ? model_from_json(j["model"], m) : ModelSpec::lasso(1.0);
    model.check_dimension(m);
    const BarrierConfig barrier = j.contains("barrier") ? barrier_config_from_json(j["barrier"]) : BarrierConfig{};

    const SolverSolution s0 = solve(g.data, model, barrier);
    const AttackTarget target = random_target(s0.beta, seed);

    std::cout << model.name() << " n=" << n << " m=" << m << " seed=" << seed << " h=" << h << "\n";
    bool ok = true;
    Json entries = Json::array();
    for (const auto& e : gradcheck(model, g.data, target, h, barrier)) {
        const bool pass = e.max_rel_error <= tol;
        ok = ok && pass;
        char line[128];
        std::snprintf(line, sizeof line, "%-30s max rel error %.3e  %s", e.name.c_str(), e.max_rel_error,
                      pass ? "ok" : "FAIL");
        std::cout << line << "\n";
        entries.push_back({{"name", e.name}, {"max_rel_error", e.max_rel_error}, {"pass", pass}});
    }
    if (!c.out.empty()) {
        write_json(fs::path(c.out) / "gradcheck.json",
                   {{"generated_at", utc_timestamp()},
                    {"model", to_json(model)},
                    {"n", n},
                    {"m", m},
                    {"seed", seed},
                    {"h", h},
                    {"tol", tol},
                    {"entries", entries}});
    }
    return ok ? 0 : 2;
}

int cmd_sweep(const Common& c)
{
    if (c.config.empty()) throw ValueError("sweep: --config is required");
    const auto runs = expand_sweep(read_json(c.config), fs::path(c.config).parent_path());
    const fs::path out = c.out.empty() ? fs::path("out/sweep") : fs::path(c.out);
    const auto results = run_sweep(runs, out, c.threads, c.seed);
    int failed = 0;
    for (const auto& r : results) {
        if (r.ok) {
            std::cout << r.name << "  " << r.summary["name"].get<std::string>() << "  seed "
                      << r.summary["seed"].get<std::uint64_t>() << "  objective "
                      << format_double(r.summary["objective_before"].get<double>()) << " -> "
                      << format_double(r.summary["objective_after"].get<double>()) << "\n";
        } else {
            ++failed;
            std::cout << r.name << "  FAILED: " << r.error << "\n";
        }
    }
    write_json(out / "sweep.json", sweep_summary(results, utc_timestamp()));
    std::cout << results.size() - failed << " of " << results.size() << " runs succeeded; summary "
              << (out / "sweep.json").string() << "\n";
    return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Adversarial attacks on l1-regularized feature selection"};
    app.require_subcommand(1);
    Common c;
    std::string data;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", c.config, "JSON config file");
        sub->add_option("--out", c.out, "output directory");
        sub->add_option("--seed", c.seed, "override the config seed");
        sub->add_option("--threads", c.threads, "worker threads for sweeps")->check(CLI::PositiveNumber);
    };
    auto* solve_cmd = app.add_subcommand("solve", "fit one model to a CSV dataset");
    add_common(solve_cmd);
    solve_cmd->add_option("--data", data, "dataset CSV (header y,x1..xm)");
    auto* attack_cmd = app.add_subcommand("attack", "run one attack scenario");
    add_common(attack_cmd);
    auto* grad_cmd = app.add_subcommand("gradcheck", "compare implicit gradients with finite differences");
    add_common(grad_cmd);
    auto* sweep_cmd = app.add_subcommand("sweep", "run a list or grid of scenarios");
    add_common(sweep_cmd);

    CLI11_PARSE(app, argc, argv);
    try {
        if (*solve_cmd) return cmd_solve(c, data);
        if (*attack_cmd) return cmd_attack(c);
        if (*grad_cmd) return cmd_gradcheck(c);
        if (*sweep_cmd) return cmd_sweep(c);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
