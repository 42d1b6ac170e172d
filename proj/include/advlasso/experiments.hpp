#pragma once

// Scenario runner: generate data, solve, attack, re-solve, measure, and write
// plot-ready artifacts plus a JSON report.

#include "advlasso/attack.hpp"
#include "advlasso/io.hpp"
#include "advlasso/scenarios.hpp"

#include <atomic>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <variant>
#include <vector>

namespace advlasso {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct SyntheticSpec {
    Index n = 30;
    Index m = 50;
    Index k_sparse = 10;
    double sigma = 0.1;
};

struct DoaSpec {
    Index N = 30;
    Index M = 50;
    Index K = 4;
    double sigma = 0.1;
    std::vector<Index> include;  // grid points that must hold a source (0-based)
    std::vector<Index> exclude;  // grid points that must stay empty (0-based)
};

struct GroupedSpec {
    Index n = 120;
    Index L = 20;
    Index p = 6;
    Index k_groups = 4;
    double within_sparsity = 0.5;
    double sigma = 0.1;
};

struct CsvSpec {
    std::string path;  // as written in the config
    fs::path resolved;
};

using DataSpec = std::variant<SyntheticSpec, DoaSpec, GroupedSpec, CsvSpec>;

/// Which indices the attacker targets. Units are coefficients or groups
/// (DOA grid points are groups); indices are 0-based here.
struct TargetSpec {
    bool random = true;
    bool group_unit = false;
    std::vector<Index> suppress;
    std::vector<Index> promote;
    Index n_suppress = 1;
    Index n_promote = 1;
    double s = AttackTarget::default_s;
    double e = AttackTarget::default_e;
    double mu = AttackTarget::default_mu;
};

struct ScenarioConfig {
    std::string name = "scenario";
    std::uint64_t seed = 0;
    DataSpec data = SyntheticSpec{};
    Json model = {{"kind", "lasso"}, {"lambda", 2.0}};
    TargetSpec target;
    AttackConfig attack;
    BarrierConfig barrier;
    double support_tol = 1e-6;

    bool is_doa() const { return std::holds_alternative<DoaSpec>(data); }
};

namespace detail {

inline Index get_size(const Json& j, const char* key, Index fallback, const std::string& where,
                      Index min_value = 1)
{
    const long long v = get_int_or(j, key, fallback, where);
    if (v < min_value)
        throw ValueError(where + ": '" + key + "' must be >= " + std::to_string(min_value));
    return static_cast<Index>(v);
}

inline DataSpec data_spec_from_json(const Json& j, const fs::path& base_dir)
{
    const std::string where = "data";
    const std::string kind = get_string(j, "kind", where);
    if (kind == "synthetic") {
        check_keys(j, {"kind", "n", "m", "k_sparse", "sigma"}, where);
        SyntheticSpec s;
        s.n = get_size(j, "n", s.n, where);
        s.m = get_size(j, "m", s.m, where);
        s.k_sparse = get_size(j, "k_sparse", s.k_sparse, where, 0);
        s.sigma = get_number_or(j, "sigma", s.sigma, where);
        return s;
    }
    if (kind == "doa") {
        check_keys(j, {"kind", "N", "M", "K", "sigma", "include", "exclude"}, where);
        DoaSpec s;
        s.N = get_size(j, "N", s.N, where);
        s.M = get_size(j, "M", s.M, where);
        s.K = get_size(j, "K", s.K, where, 0);
        s.sigma = get_number_or(j, "sigma", s.sigma, where);
        if (j.contains("include")) s.include = get_indices(j["include"], where + ".include");
        if (j.contains("exclude")) s.exclude = get_indices(j["exclude"], where + ".exclude");
        return s;
    }
    if (kind == "grouped") {
        check_keys(j, {"kind", "n", "L", "p", "k_groups", "within_sparsity", "sigma"}, where);
        GroupedSpec s;
        s.n = get_size(j, "n", s.n, where);
        s.L = get_size(j, "L", s.L, where);
        s.p = get_size(j, "p", s.p, where);
        s.k_groups = get_size(j, "k_groups", s.k_groups, where, 0);
        s.within_sparsity = get_number_or(j, "within_sparsity", s.within_sparsity, where);
        s.sigma = get_number_or(j, "sigma", s.sigma, where);
        return s;
    }
    if (kind == "csv") {
        check_keys(j, {"kind", "path"}, where);
        CsvSpec s;
        s.path = get_string(j, "path", where);
        const fs::path p(s.path);
        s.resolved = p.is_absolute() ? p : base_dir / p;
        return s;
    }
    throw ValueError(where + ": unknown kind '" + kind + "' (expected synthetic, doa, grouped or csv)");
}

inline Json to_json(const DataSpec& spec)
{
    return std::visit(
        [](const auto& s) -> Json {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, SyntheticSpec>) {
                return {{"kind", "synthetic"}, {"n", s.n}, {"m", s.m}, {"k_sparse", s.k_sparse},
                        {"sigma", s.sigma}};
            } else if constexpr (std::is_same_v<T, DoaSpec>) {
                return {{"kind", "doa"},      {"N", s.N},
                        {"M", s.M},           {"K", s.K},
                        {"sigma", s.sigma},   {"include", to_json_1based(s.include)},
                        {"exclude", to_json_1based(s.exclude)}};
            } else if constexpr (std::is_same_v<T, GroupedSpec>) {
                return {{"kind", "grouped"}, {"n", s.n},
                        {"L", s.L},          {"p", s.p},
                        {"k_groups", s.k_groups}, {"within_sparsity", s.within_sparsity},
                        {"sigma", s.sigma}};
            } else {
                return {{"kind", "csv"}, {"path", s.path}};
            }
        },
        spec);
}

inline TargetSpec target_spec_from_json(const Json& j)
{
    const std::string where = "target";
    check_keys(j, {"select", "unit", "suppress", "promote", "n_suppress", "n_promote", "s", "e", "mu"},
               where);
    TargetSpec t;
    const std::string select = j.contains("select") ? get_string(j, "select", where) : "random";
    if (select == "random") t.random = true;
    else if (select == "explicit") t.random = false;
    else throw ValueError(where + ": 'select' must be random or explicit");
    const std::string unit = j.contains("unit") ? get_string(j, "unit", where) : "coefficient";
    if (unit == "coefficient") t.group_unit = false;
    else if (unit == "group") t.group_unit = true;
    else throw ValueError(where + ": 'unit' must be coefficient or group");
    if (t.random) {
        if (j.contains("suppress") || j.contains("promote"))
            throw ValueError(where + ": explicit indices need \"select\": \"explicit\"");
        t.n_suppress = get_size(j, "n_suppress", t.n_suppress, where, 0);
        t.n_promote = get_size(j, "n_promote", t.n_promote, where, 0);
    } else {
        if (j.contains("n_suppress") || j.contains("n_promote"))
            throw ValueError(where + ": n_suppress / n_promote apply to random selection only");
        if (j.contains("suppress")) t.suppress = get_indices(j["suppress"], where + ".suppress");
        if (j.contains("promote")) t.promote = get_indices(j["promote"], where + ".promote");
    }
    t.s = get_number_or(j, "s", t.s, where);
    t.e = get_number_or(j, "e", t.e, where);
    t.mu = get_number_or(j, "mu", t.mu, where);
    if (!(t.s > 0.0)) throw ValueError(where + ": 's' must be > 0");
    if (!(t.e < 0.0)) throw ValueError(where + ": 'e' must be < 0");
    if (!(t.mu > 0.0)) throw ValueError(where + ": 'mu' must be > 0");
    return t;
}

inline Json to_json(const TargetSpec& t)
{
    Json j;
    j["select"] = t.random ? "random" : "explicit";
    j["unit"] = t.group_unit ? "group" : "coefficient";
    if (t.random) {
        j["n_suppress"] = t.n_suppress;
        j["n_promote"] = t.n_promote;
    } else {
        j["suppress"] = to_json_1based(t.suppress);
        j["promote"] = to_json_1based(t.promote);
    }
    j["s"] = t.s;
    j["e"] = t.e;
    j["mu"] = t.mu;
    return j;
}

}  // namespace detail

inline ScenarioConfig scenario_config_from_json(const Json& j, const fs::path& base_dir = ".")
{
    check_keys(j, {"name", "seed", "data", "model", "target", "attack", "barrier", "support_tol"},
               "config");
    ScenarioConfig c;
    if (j.contains("name")) c.name = get_string(j, "name", "config");
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
            throw ValueError("config: 'seed' must be a non-negative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    if (!j.contains("data")) throw ValueError("config: missing 'data'");
    c.data = detail::data_spec_from_json(j["data"], base_dir);
    if (!j.contains("model")) throw ValueError("config: missing 'model'");
    if (!j["model"].is_object()) throw ValueError("model: expected an object");
    c.model = j["model"];
    if (j.contains("target")) c.target = detail::target_spec_from_json(j["target"]);
    if (!j.contains("attack")) throw ValueError("config: missing 'attack'");
    c.attack = attack_config_from_json(j["attack"]);
    c.attack.validate();
    if (j.contains("barrier")) c.barrier = barrier_config_from_json(j["barrier"]);
    c.support_tol = get_number_or(j, "support_tol", c.support_tol, "config");
    if (!(c.support_tol >= 0.0)) throw ValueError("config: 'support_tol' must be >= 0");

    if (c.is_doa()) {
        if (c.attack.attack_X || c.attack.budget.eta_x > 0.0)
            throw ValueError("attack: DOA scenarios perturb only the measurements; "
                             "attack_X must be false and eta_x 0");
        if (!c.model.contains("groups") && !c.model.contains("group_size") &&
            c.model.value("kind", "") != "lasso")
            c.model["group_size"] = 2;
    }
    return c;
}

inline ScenarioConfig load_scenario_config(const fs::path& path)
{
    try {
        return scenario_config_from_json(read_json(path), path.parent_path());
    } catch (const Error& e) {
        throw ValueError(path.string() + ": " + e.what());
    }
}

inline Json to_json(const ScenarioConfig& c, const ModelSpec* resolved_model = nullptr)
{
    Json j;
    j["name"] = c.name;
    j["seed"] = c.seed;
    j["data"] = detail::to_json(c.data);
    j["model"] = resolved_model ? to_json(*resolved_model) : c.model;
    j["target"] = detail::to_json(c.target);
    j["attack"] = to_json(c.attack);
    j["barrier"] = to_json(c.barrier);
    j["support_tol"] = c.support_tol;
    return j;
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

struct UnitOutcome {
    Index unit;  // 0-based coefficient or group
    double before;
    double after;
    bool in_support_before;
    bool in_support_after;
};

struct ScenarioOutcome {
    Dataset clean{Vector::Zero(1), Matrix::Zero(1, 1)};
    std::optional<Vector> v_true;
    std::optional<DoaScene> doa;
    ModelSpec model = ModelSpec::lasso(1.0);
    AttackTarget target;
    std::optional<GroupPartition> units;  // set when targets are groups
    AttackResult result;
    FitMetrics before_clean{};
    FitMetrics after_clean{};
    FitMetrics after_poisoned{};
    std::vector<Index> support_before;
    std::vector<Index> support_after;
    std::vector<Index> unit_support_before;
    std::vector<Index> unit_support_after;
    std::vector<UnitOutcome> suppressed;
    std::vector<UnitOutcome> promoted;
    double untouched_preserved = 1.0;  // share of untargeted support units kept

    double objective_before() const { return result.objective_trace.front(); }
    double objective_after() const { return result.objective_trace.back(); }
};

namespace detail {

inline DoaData make_doa_scene(const DoaSpec& s, std::uint64_t seed)
{
    if (s.K > s.M) throw ValueError("data: K exceeds the grid size M");
    std::vector<char> state(static_cast<std::size_t>(s.M), 0);  // 1 include, 2 exclude
    for (Index i : s.exclude) {
        if (i >= s.M) throw ValueError("data.exclude: grid index outside 1..M");
        state[static_cast<std::size_t>(i)] = 2;
    }
    std::vector<Index> sources;
    for (Index i : s.include) {
        if (i >= s.M) throw ValueError("data.include: grid index outside 1..M");
        if (state[static_cast<std::size_t>(i)] == 2)
            throw ValueError("data: grid index " + std::to_string(i + 1) + " is both included and excluded");
        if (state[static_cast<std::size_t>(i)] == 0) sources.push_back(i);
        state[static_cast<std::size_t>(i)] = 1;
    }
    if (static_cast<Index>(sources.size()) > s.K) throw ValueError("data: more included sources than K");
    std::vector<Index> free;
    for (Index i = 0; i < s.M; ++i)
        if (state[static_cast<std::size_t>(i)] == 0) free.push_back(i);
    const Index extra = s.K - static_cast<Index>(sources.size());
    if (extra > static_cast<Index>(free.size())) throw ValueError("data: not enough free grid points");

    Rng rng(seed);
    for (Index k : choose_indices(rng, static_cast<Index>(free.size()), extra))
        sources.push_back(free[static_cast<std::size_t>(k)]);
    std::sort(sources.begin(), sources.end());
    ComplexVector amp = normal_amplitudes(rng, s.K);
    return make_doa(s.N, s.M, std::move(sources), std::move(amp), s.sigma, rng);
}

inline std::vector<Index> unit_members(const std::optional<GroupPartition>& units, Index u)
{
    if (!units) return {u};
    std::vector<Index> out;
    for (Index j = 0; j < units->size(u); ++j) out.push_back(units->offset(u) + j);
    return out;
}

inline double unit_magnitude(const std::optional<GroupPartition>& units, const Vector& beta, Index u)
{
    if (!units) return std::abs(beta(u));
    return beta.segment(units->offset(u), units->size(u)).norm();
}

inline Index unit_count(const std::optional<GroupPartition>& units, Index m)
{
    return units ? units->num_groups() : m;
}

inline std::vector<Index> unit_support(const std::optional<GroupPartition>& units, const Vector& beta,
                                       double tol)
{
    std::vector<Index> out;
    for (Index u = 0; u < unit_count(units, beta.size()); ++u)
        if (unit_magnitude(units, beta, u) > tol) out.push_back(u);
    return out;
}

}  // namespace detail

/// Runs one scenario in memory.
inline ScenarioOutcome execute_scenario(const ScenarioConfig& cfg)
{
    ScenarioOutcome out;
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, SyntheticSpec>) {
                auto g = gen_synthetic(s.n, s.m, s.k_sparse, s.sigma, cfg.seed);
                out.clean = std::move(g.data);
                out.v_true = std::move(g.v_true);
            } else if constexpr (std::is_same_v<T, DoaSpec>) {
                auto g = detail::make_doa_scene(s, cfg.seed);
                out.clean = std::move(g.data);
                out.doa = std::move(g.scene);
            } else if constexpr (std::is_same_v<T, GroupedSpec>) {
                auto g = gen_grouped_synthetic(s.n, s.L, s.p, s.k_groups, s.within_sparsity, s.sigma,
                                               cfg.seed);
                out.clean = std::move(g.data);
                out.v_true = std::move(g.v_true);
            } else {
                out.clean = read_dataset_csv(s.resolved);
            }
        },
        cfg.data);

    const Index m = out.clean.m();
    out.model = model_from_json(cfg.model, m);
    out.model.check_dimension(m);

    if (cfg.target.group_unit) {
        if (out.doa) out.units = out.doa->groups();
        else if (const GroupPartition* g = out.model.groups()) out.units = *g;
        else throw ValueError("target: unit 'group' needs a grouped model or a DOA scene");
    }
    const auto& units = out.units;
    const Index n_units = detail::unit_count(units, m);

    const SolverSolution s0 = solve(out.clean, out.model, cfg.barrier);

    std::vector<Index> sup_units, pro_units;
    if (cfg.target.random) {
        const auto active = detail::unit_support(units, s0.beta, cfg.support_tol);
        std::vector<Index> inactive;
        for (Index u = 0, k = 0; u < n_units; ++u) {
            if (k < static_cast<Index>(active.size()) && active[static_cast<std::size_t>(k)] == u) ++k;
            else inactive.push_back(u);
        }
        Rng rng = detail::target_rng(cfg.seed);
        sup_units = detail::pick(rng, active, cfg.target.n_suppress, "active");
        pro_units = detail::pick(rng, inactive, cfg.target.n_promote, "inactive");
    } else {
        sup_units = cfg.target.suppress;
        pro_units = cfg.target.promote;
        for (Index u : sup_units)
            if (u >= n_units) throw PartitionError("target.suppress: index outside 1.." + std::to_string(n_units));
        for (Index u : pro_units)
            if (u >= n_units) throw PartitionError("target.promote: index outside 1.." + std::to_string(n_units));
    }

    std::vector<Index> sup, pro;
    for (Index u : sup_units)
        for (Index i : detail::unit_members(units, u)) sup.push_back(i);
    for (Index u : pro_units)
        for (Index i : detail::unit_members(units, u)) pro.push_back(i);
    out.target = AttackTarget::from_sets(m, sup, pro, cfg.target.s, cfg.target.e, cfg.target.mu);

    out.result = run_attack(out.clean, out.model, out.target, cfg.attack, cfg.barrier);
    if (out.result.aborted) throw Error("attack aborted at " + out.result.abort_reason);

    const Vector& b0 = out.result.beta_before;
    const Vector& b1 = out.result.beta_after;
    out.before_clean = metrics(out.clean.y(), out.clean.X() * b0);
    out.after_clean = metrics(out.clean.y(), out.clean.X() * b1);
    out.after_poisoned = metrics(out.result.y_adv, out.result.X_adv * b1);
    out.support_before = support(b0, cfg.support_tol);
    out.support_after = support(b1, cfg.support_tol);
    out.unit_support_before = detail::unit_support(units, b0, cfg.support_tol);
    out.unit_support_after = detail::unit_support(units, b1, cfg.support_tol);

    auto outcome = [&](Index u) {
        const double before = detail::unit_magnitude(units, b0, u);
        const double after = detail::unit_magnitude(units, b1, u);
        return UnitOutcome{u, before, after, before > cfg.support_tol, after > cfg.support_tol};
    };
    for (Index u : sup_units) out.suppressed.push_back(outcome(u));
    for (Index u : pro_units) out.promoted.push_back(outcome(u));

    std::vector<char> targeted(static_cast<std::size_t>(n_units), 0);
    for (Index u : sup_units) targeted[static_cast<std::size_t>(u)] = 1;
    for (Index u : pro_units) targeted[static_cast<std::size_t>(u)] = 1;
    std::vector<char> after_set(static_cast<std::size_t>(n_units), 0);
    for (Index u : out.unit_support_after) after_set[static_cast<std::size_t>(u)] = 1;
    Index untouched = 0, kept = 0;
    for (Index u : out.unit_support_before) {
        if (targeted[static_cast<std::size_t>(u)]) continue;
        ++untouched;
        if (after_set[static_cast<std::size_t>(u)]) ++kept;
    }
    out.untouched_preserved =
        untouched == 0 ? 1.0 : static_cast<double>(kept) / static_cast<double>(untouched);
    return out;
}

// ---------------------------------------------------------------------------
// Report and artifacts
// ---------------------------------------------------------------------------

struct Artifacts {
    std::string data_clean = "data_clean.csv";
    std::string data_poisoned = "data_poisoned.csv";
    std::string coefficients = "coefficients.csv";
    std::string trace = "trace.csv";
    std::string attack_result = "attack_result.json";
    std::string report = "report.json";
    std::string spectrum = "spectrum.csv";  // DOA only
};

inline std::string utc_timestamp()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline Json to_json(const FitMetrics& f) { return {{"r2", f.r2}, {"rmse", f.rmse}}; }

inline Json to_json(const UnitOutcome& u)
{
    return {{"index", u.unit + 1},
            {"magnitude_before", u.before},
            {"magnitude_after", u.after},
            {"in_support_before", u.in_support_before},
            {"in_support_after", u.in_support_after}};
}

/// The report; `generated_at` is its only run-dependent field.
inline Json scenario_report(const ScenarioConfig& cfg, const ScenarioOutcome& o, const Artifacts& a,
                            const std::string& generated_at)
{
    Json j;
    j["generated_at"] = generated_at;
    j["config"] = to_json(cfg, &o.model);
    j["dimensions"] = {{"n", o.clean.n()}, {"m", o.clean.m()}};
    if (o.doa) {
        j["doa"] = {{"sources", to_json_1based(o.doa->sources)},
                    {"column_layout", "grid i -> columns 2i-1 (real), 2i (imaginary)"}};
    }
    j["resolved_target"] = to_json(o.target);
    j["unit"] = o.units ? "group" : "coefficient";

    const auto& r = o.result;
    j["attack"] = {{"iterations_used", r.iterations_used},
                   {"converged", r.converged},
                   {"objective_before", o.objective_before()},
                   {"objective_after", o.objective_after()}};
    j["before"] = {{"clean", to_json(o.before_clean)},
                   {"support", to_json_1based(o.support_before)},
                   {"unit_support", to_json_1based(o.unit_support_before)}};
    j["after"] = {{"clean", to_json(o.after_clean)},
                  {"poisoned", to_json(o.after_poisoned)},
                  {"support", to_json_1based(o.support_after)},
                  {"unit_support", to_json_1based(o.unit_support_after)}};
    Json sup = Json::array(), pro = Json::array();
    for (const auto& u : o.suppressed) sup.push_back(to_json(u));
    for (const auto& u : o.promoted) pro.push_back(to_json(u));
    j["targets"] = {{"suppressed", sup}, {"promoted", pro}, {"untouched_preserved", o.untouched_preserved}};

    Json art = {{"data_clean", a.data_clean},
                {"data_poisoned", a.data_poisoned},
                {"coefficients", a.coefficients},
                {"trace", a.trace},
                {"attack_result", a.attack_result}};
    if (o.doa) art["spectrum"] = a.spectrum;
    j["artifacts"] = std::move(art);
    return j;
}

inline void write_spectrum_csv(const fs::path& path, const Vector& before, const Vector& after)
{
    const Vector mb = DoaScene::magnitudes(before), ma = DoaScene::magnitudes(after);
    auto f = open_for_write(path);
    f << "grid,magnitude_before,magnitude_after\n";
    for (Index i = 0; i < mb.size(); ++i)
        f << (i + 1) << ',' << format_double(mb(i)) << ',' << format_double(ma(i)) << '\n';
    if (!f) throw IoError("write failed for '" + path.string() + "'");
}

struct ScenarioRun {
    ScenarioOutcome outcome;
    Json report;
    fs::path report_path;
};

/// Executes the scenario and writes every artifact into out_dir.
inline ScenarioRun run_scenario(const ScenarioConfig& cfg, const fs::path& out_dir)
{
    ScenarioRun run;
    run.outcome = execute_scenario(cfg);
    const auto& o = run.outcome;
    const Artifacts a;
    fs::create_directories(out_dir);
    write_dataset_csv(out_dir / a.data_clean, o.clean);
    write_dataset_csv(out_dir / a.data_poisoned, Dataset(o.result.y_adv, o.result.X_adv));
    write_coefficients_csv(out_dir / a.coefficients, o.result.beta_before, o.result.beta_after);
    write_trace_csv(out_dir / a.trace, o.result.objective_trace);
    write_json(out_dir / a.attack_result, to_json(o.result));
    if (o.doa) write_spectrum_csv(out_dir / a.spectrum, o.result.beta_before, o.result.beta_after);
    run.report = scenario_report(cfg, o, a, utc_timestamp());
    run.report_path = out_dir / a.report;
    write_json(run.report_path, run.report);
    return run;
}

inline ScenarioRun run_scenario(const fs::path& config_path, const fs::path& out_dir,
                                std::optional<std::uint64_t> seed = std::nullopt)
{
    ScenarioConfig cfg = load_scenario_config(config_path);
    if (seed) cfg.seed = *seed;
    try {
        return run_scenario(cfg, out_dir);
    } catch (const Error& e) {
        throw Error(config_path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// Sets a dotted path such as "attack.eta_y" inside a config object.
inline void set_path(Json& j, const std::string& path, const Json& value)
{
    Json* cur = &j;
    std::size_t start = 0;
    for (;;) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) throw ValueError("sweep: bad parameter path '" + path + "'");
        if (dot == std::string::npos) {
            (*cur)[key] = value;
            return;
        }
        if (!cur->contains(key)) (*cur)[key] = Json::object();
        cur = &(*cur)[key];
        if (!cur->is_object()) throw ValueError("sweep: '" + path + "' crosses a non-object");
        start = dot + 1;
    }
}

struct SweepRun {
    std::string name;
    ScenarioConfig config;
};

/// {"base": {...} or "path", "grid": {"attack.eta_y": [1, 2], "seed": [0, 1]},
///  "runs": [{...} or "path", ...]}. The grid expands as a Cartesian product
/// in key order with the last key varying fastest.
inline std::vector<SweepRun> expand_sweep(const Json& j, const fs::path& base_dir)
{
    check_keys(j, {"base", "grid", "runs"}, "sweep");
    auto load = [&](const Json& e, Json& raw, fs::path& dir) {
        if (e.is_string()) {
            const fs::path p = fs::path(e.get<std::string>()).is_absolute()
                                   ? fs::path(e.get<std::string>())
                                   : base_dir / e.get<std::string>();
            raw = read_json(p);
            dir = p.parent_path();
        } else if (e.is_object()) {
            raw = e;
            dir = base_dir;
        } else {
            throw ValueError("sweep: configs must be objects or paths");
        }
    };

    std::vector<SweepRun> out;
    auto add = [&](std::string name, const Json& raw, const fs::path& dir) {
        try {
            out.push_back({std::move(name), scenario_config_from_json(raw, dir)});
        } catch (const Error& e) {
            throw ValueError("sweep run '" + name + "': " + e.what());
        }
    };

    if (j.contains("base")) {
        Json base;
        fs::path dir;
        load(j["base"], base, dir);
        std::vector<std::pair<std::string, Json>> axes;
        if (j.contains("grid")) {
            if (!j["grid"].is_object()) throw ValueError("sweep: 'grid' must be an object");
            for (auto it = j["grid"].begin(); it != j["grid"].end(); ++it) {
                if (!it.value().is_array() || it.value().empty())
                    throw ValueError("sweep: grid axis '" + it.key() + "' needs a non-empty array");
                axes.emplace_back(it.key(), it.value());
            }
        }
        std::vector<std::size_t> idx(axes.size(), 0);
        for (std::size_t count = 0;; ++count) {
            Json cfg = base;
            for (std::size_t a = 0; a < axes.size(); ++a) set_path(cfg, axes[a].first, axes[a].second[idx[a]]);
            char name[32];
            std::snprintf(name, sizeof name, "run_%04zu", count);
            add(name, cfg, dir);
            bool done = true;
            for (std::size_t a = axes.size(); a-- > 0;) {
                if (++idx[a] < axes[a].second.size()) {
                    done = false;
                    break;
                }
                idx[a] = 0;
            }
            if (done) break;
        }
    } else if (j.contains("grid")) {
        throw ValueError("sweep: 'grid' needs a 'base' config");
    }
    if (j.contains("runs")) {
        if (!j["runs"].is_array()) throw ValueError("sweep: 'runs' must be an array");
        std::size_t k = 0;
        for (const auto& e : j["runs"]) {
            Json raw;
            fs::path dir;
            load(e, raw, dir);
            char name[32];
            std::snprintf(name, sizeof name, "list_%04zu", k++);
            add(name, raw, dir);
        }
    }
    if (out.empty()) throw ValueError("sweep: no runs (give 'base' and/or 'runs')");
    return out;
}

struct SweepEntry {
    std::string name;
    bool ok = false;
    std::string error;
    Json summary;
};

/// Runs every sweep entry on up to `threads` workers, each in its own
/// subdirectory of out_dir. Results are returned in input order.
inline std::vector<SweepEntry> run_sweep(const std::vector<SweepRun>& runs, const fs::path& out_dir,
                                         unsigned threads, std::optional<std::uint64_t> seed = std::nullopt)
{
    std::vector<SweepEntry> results(runs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < runs.size(); i = next++) {
            SweepEntry& r = results[i];
            r.name = runs[i].name;
            ScenarioConfig cfg = runs[i].config;
            if (seed) cfg.seed = *seed;
            try {
                const auto run = run_scenario(cfg, out_dir / r.name);
                r.ok = true;
                r.summary = {{"name", cfg.name},
                             {"seed", cfg.seed},
                             {"report", (fs::path(r.name) / "report.json").generic_string()},
                             {"objective_before", run.outcome.objective_before()},
                             {"objective_after", run.outcome.objective_after()}};
            } catch (const std::exception& e) {
                r.error = e.what();
            }
        }
    };
    const unsigned k = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(runs.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < k; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    return results;
}

inline Json sweep_summary(const std::vector<SweepEntry>& entries, const std::string& generated_at)
{
    Json runs = Json::array();
    for (const auto& e : entries) {
        Json r = {{"run", e.name}, {"ok", e.ok}};
        if (e.ok) r["result"] = e.summary;
        else r["error"] = e.error;
        runs.push_back(std::move(r));
    }
    return {{"generated_at", generated_at}, {"runs", std::move(runs)}};
}

}  // namespace advlasso
