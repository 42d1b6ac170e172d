#pragma once

// CSV and JSON persistence. Numbers are written in shortest round-trip form
// with std::to_chars, so reading a file back reproduces every double
// exactly, independent of the C locale.

#include "advlasso/attack.hpp"
#include "advlasso/types.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace advlasso {

using Json = nlohmann::ordered_json;

struct IoError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Numbers and CSV
// ---------------------------------------------------------------------------

inline std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    if (res.ec != std::errc()) throw IoError("cannot format number");
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw IoError("not a number: '" + std::string(s) + "'");
    return v;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos
                                                                       : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::ofstream open_for_write(const std::filesystem::path& path)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
    return f;
}

inline std::string read_text(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

/// Header `y,x1,...,xm`, one sample per row.
inline void write_dataset_csv(const std::filesystem::path& path, const Dataset& d)
{
    auto f = open_for_write(path);
    f << "y";
    for (Index j = 1; j <= d.m(); ++j) f << ",x" << j;
    f << '\n';
    for (Index i = 0; i < d.n(); ++i) {
        f << format_double(d.y()(i));
        for (Index j = 0; j < d.m(); ++j) f << ',' << format_double(d.X()(i, j));
        f << '\n';
    }
    if (!f) throw IoError("write failed for '" + path.string() + "'");
}

inline Dataset read_dataset_csv(const std::filesystem::path& path)
{
    const std::string text = read_text(path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw IoError("'" + path.string() + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "y")
        throw IoError("'" + path.string() + "': header must be y,x1,...,xm");
    for (std::size_t j = 1; j < header.size(); ++j)
        if (header[j] != "x" + std::to_string(j))
            throw IoError("'" + path.string() + "': header column " + std::to_string(j + 1) +
                          " must be x" + std::to_string(j));
    const Index m = static_cast<Index>(header.size()) - 1;

    std::vector<double> vals;
    Index n = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (static_cast<Index>(cells.size()) != m + 1)
            throw IoError("'" + path.string() + "' row " + std::to_string(n + 2) + " has " +
                          std::to_string(cells.size()) + " fields, expected " +
                          std::to_string(m + 1));
        for (auto c : cells) vals.push_back(parse_double(c));
        ++n;
    }
    if (n == 0) throw IoError("'" + path.string() + "' has no data rows");
    Vector y(n);
    Matrix X(n, m);
    for (Index i = 0; i < n; ++i) {
        const double* row = vals.data() + i * (m + 1);
        y(i) = row[0];
        for (Index j = 0; j < m; ++j) X(i, j) = row[j + 1];
    }
    return Dataset(std::move(y), std::move(X));
}

/// Header `iter,objective`; iteration 0 is the clean data.
inline void write_trace_csv(const std::filesystem::path& path, const std::vector<double>& trace)
{
    auto f = open_for_write(path);
    f << "iter,objective\n";
    for (std::size_t i = 0; i < trace.size(); ++i) f << i << ',' << format_double(trace[i]) << '\n';
    if (!f) throw IoError("write failed for '" + path.string() + "'");
}

inline std::vector<double> read_trace_csv(const std::filesystem::path& path)
{
    std::istringstream in(read_text(path));
    std::string line;
    std::getline(in, line);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "iter,objective") throw IoError("'" + path.string() + "': bad trace header");
    std::vector<double> out;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 2) throw IoError("'" + path.string() + "': bad trace row");
        out.push_back(parse_double(cells[1]));
    }
    return out;
}

/// Header `index,beta_before,beta_after` with 1-based indices.
inline void write_coefficients_csv(const std::filesystem::path& path, const Vector& before,
                                   const Vector& after)
{
    require_dims(before.size() == after.size(), "coefficient vectors");
    auto f = open_for_write(path);
    f << "index,beta_before,beta_after\n";
    for (Index i = 0; i < before.size(); ++i)
        f << (i + 1) << ',' << format_double(before(i)) << ',' << format_double(after(i)) << '\n';
    if (!f) throw IoError("write failed for '" + path.string() + "'");
}

/// Header `index,beta` with 1-based indices.
inline void write_beta_csv(const std::filesystem::path& path, const Vector& beta)
{
    auto f = open_for_write(path);
    f << "index,beta\n";
    for (Index i = 0; i < beta.size(); ++i) f << (i + 1) << ',' << format_double(beta(i)) << '\n';
    if (!f) throw IoError("write failed for '" + path.string() + "'");
}

inline std::pair<Vector, Vector> read_coefficients_csv(const std::filesystem::path& path)
{
    std::istringstream in(read_text(path));
    std::string line;
    std::getline(in, line);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "index,beta_before,beta_after")
        throw IoError("'" + path.string() + "': bad coefficient header");
    std::vector<double> b, a;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 3) throw IoError("'" + path.string() + "': bad coefficient row");
        b.push_back(parse_double(cells[1]));
        a.push_back(parse_double(cells[2]));
    }
    return {Eigen::Map<Vector>(b.data(), static_cast<Index>(b.size())),
            Eigen::Map<Vector>(a.data(), static_cast<Index>(a.size()))};
}

// ---------------------------------------------------------------------------
// JSON helpers
// ---------------------------------------------------------------------------

inline Json to_json(const Vector& v)
{
    Json a = Json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

inline Json to_json(const Matrix& M)
{
    Json rows = Json::array();
    for (Index i = 0; i < M.rows(); ++i) {
        Json r = Json::array();
        for (Index j = 0; j < M.cols(); ++j) r.push_back(M(i, j));
        rows.push_back(std::move(r));
    }
    return rows;
}

inline Json to_json_1based(const std::vector<Index>& idx)
{
    Json a = Json::array();
    for (Index i : idx) a.push_back(i + 1);
    return a;
}

/// Rejects keys outside `allowed` so that typos in configs surface.
inline void check_keys(const Json& j, std::initializer_list<std::string_view> allowed,
                       const std::string& where)
{
    if (!j.is_object()) throw ValueError(where + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (auto a : allowed) ok = ok || it.key() == a;
        if (!ok) throw ValueError(where + ": unknown key '" + it.key() + "'");
    }
}

inline double get_number(const Json& j, const char* key, const std::string& where)
{
    if (!j.contains(key)) throw ValueError(where + ": missing '" + key + "'");
    if (!j[key].is_number()) throw ValueError(where + ": '" + key + "' must be a number");
    return j[key].get<double>();
}

inline double get_number_or(const Json& j, const char* key, double fallback, const std::string& where)
{
    return j.contains(key) ? get_number(j, key, where) : fallback;
}

inline long long get_int(const Json& j, const char* key, const std::string& where)
{
    if (!j.contains(key)) throw ValueError(where + ": missing '" + key + "'");
    if (!j[key].is_number_integer()) throw ValueError(where + ": '" + key + "' must be an integer");
    return j[key].get<long long>();
}

inline long long get_int_or(const Json& j, const char* key, long long fallback, const std::string& where)
{
    return j.contains(key) ? get_int(j, key, where) : fallback;
}

inline bool get_bool_or(const Json& j, const char* key, bool fallback, const std::string& where)
{
    if (!j.contains(key)) return fallback;
    if (!j[key].is_boolean()) throw ValueError(where + ": '" + key + "' must be true or false");
    return j[key].get<bool>();
}

inline std::string get_string(const Json& j, const char* key, const std::string& where)
{
    if (!j.contains(key)) throw ValueError(where + ": missing '" + key + "'");
    if (!j[key].is_string()) throw ValueError(where + ": '" + key + "' must be a string");
    return j[key].get<std::string>();
}

/// 1-based index list -> 0-based.
inline std::vector<Index> get_indices(const Json& j, const std::string& where)
{
    if (!j.is_array()) throw ValueError(where + ": expected an array of 1-based indices");
    std::vector<Index> out;
    for (const auto& e : j) {
        if (!e.is_number_integer() || e.get<long long>() < 1)
            throw ValueError(where + ": indices must be integers >= 1");
        out.push_back(static_cast<Index>(e.get<long long>()) - 1);
    }
    return out;
}

// ---------------------------------------------------------------------------
// ModelSpec
// ---------------------------------------------------------------------------

/// {"kind": "lasso", "lambda": 2}
/// {"kind": "group", "lambda": 4, "groups": [2, 2, ...]} or "group_size": 2
/// {"kind": "sparse_group", "lambda1": 1, "lambda2": 1, "groups"/"group_size"}
inline GroupPartition groups_from_json(const Json& j, Index m, const std::string& where)
{
    if (j.contains("groups")) {
        if (j.contains("group_size")) throw ValueError(where + ": give either groups or group_size");
        if (!j["groups"].is_array()) throw ValueError(where + ": 'groups' must be an array of sizes");
        std::vector<Index> sizes;
        for (const auto& e : j["groups"]) {
            if (!e.is_number_integer()) throw ValueError(where + ": group sizes must be integers");
            sizes.push_back(static_cast<Index>(e.get<long long>()));
        }
        return GroupPartition(std::move(sizes));
    }
    const long long p = get_int(j, "group_size", where);
    if (p < 1 || m < 1 || m % p != 0)
        throw PartitionError(where + ": group_size " + std::to_string(p) +
                             " does not divide the feature count " + std::to_string(m));
    return GroupPartition::uniform(m / static_cast<Index>(p), static_cast<Index>(p));
}

inline ModelSpec model_from_json(const Json& j, Index m)
{
    const std::string where = "model";
    const std::string kind = get_string(j, "kind", where);
    if (kind == "lasso") {
        check_keys(j, {"kind", "lambda"}, where);
        return ModelSpec::lasso(get_number(j, "lambda", where));
    }
    if (kind == "group") {
        check_keys(j, {"kind", "lambda", "groups", "group_size"}, where);
        return ModelSpec::group(get_number(j, "lambda", where), groups_from_json(j, m, where));
    }
    if (kind == "sparse_group") {
        check_keys(j, {"kind", "lambda1", "lambda2", "groups", "group_size"}, where);
        return ModelSpec::sparse_group(get_number(j, "lambda1", where), get_number(j, "lambda2", where),
                                       groups_from_json(j, m, where));
    }
    throw ValueError(where + ": unknown kind '" + kind + "' (expected lasso, group or sparse_group)");
}

inline Json to_json(const ModelSpec& model)
{
    Json j;
    j["kind"] = model.name();
    if (auto l = model.as_lasso()) j["lambda"] = l->lambda;
    if (auto g = model.as_group()) j["lambda"] = g->lambda;
    if (auto s = model.as_sparse_group()) {
        j["lambda1"] = s->lambda1;
        j["lambda2"] = s->lambda2;
    }
    if (const GroupPartition* g = model.groups()) {
        const auto& sz = g->sizes();
        if (std::adjacent_find(sz.begin(), sz.end(), std::not_equal_to<>()) == sz.end()) {
            j["group_size"] = sz.front();
        } else {
            Json sizes = Json::array();
            for (Index p : sz) sizes.push_back(p);
            j["groups"] = std::move(sizes);
        }
    }
    return j;
}

// ---------------------------------------------------------------------------
// AttackTarget
// ---------------------------------------------------------------------------

/// {"suppress": [i...], "promote": [i...], "keep": [i...] (optional, default:
///  every other index), "s": w or [w...], "e": ..., "mu": ...}; indices are
/// 1-based.
inline AttackTarget target_from_json(const Json& j, Index m)
{
    const std::string where = "target";
    check_keys(j, {"suppress", "promote", "keep", "s", "e", "mu"}, where);
    auto weights = [&](const char* key, std::size_t count, double fallback) {
        std::vector<double> w(count, fallback);
        if (!j.contains(key)) return w;
        const Json& v = j[key];
        if (v.is_number()) {
            std::fill(w.begin(), w.end(), v.get<double>());
        } else if (v.is_array()) {
            if (v.size() != count)
                throw PartitionError(where + ": '" + key + "' needs one weight per index");
            for (std::size_t k = 0; k < count; ++k) {
                if (!v[k].is_number()) throw ValueError(where + ": weights must be numbers");
                w[k] = v[k].get<double>();
            }
        } else {
            throw ValueError(where + ": '" + key + "' must be a number or an array");
        }
        return w;
    };

    AttackTarget t;
    t.suppress = j.contains("suppress") ? get_indices(j["suppress"], where + ".suppress")
                                        : std::vector<Index>{};
    t.promote = j.contains("promote") ? get_indices(j["promote"], where + ".promote")
                                      : std::vector<Index>{};
    if (j.contains("keep")) {
        t.keep = get_indices(j["keep"], where + ".keep");
    } else {
        std::vector<char> used(static_cast<std::size_t>(m), 0);
        for (Index i : t.suppress)
            if (i < m) used[static_cast<std::size_t>(i)] = 1;
        for (Index i : t.promote)
            if (i < m) used[static_cast<std::size_t>(i)] = 1;
        for (Index i = 0; i < m; ++i)
            if (!used[static_cast<std::size_t>(i)]) t.keep.push_back(i);
    }
    t.s = weights("s", t.suppress.size(), AttackTarget::default_s);
    t.e = weights("e", t.promote.size(), AttackTarget::default_e);
    t.mu = weights("mu", t.keep.size(), AttackTarget::default_mu);
    return t;
}

inline Json to_json(const AttackTarget& t)
{
    Json j;
    j["suppress"] = to_json_1based(t.suppress);
    j["promote"] = to_json_1based(t.promote);
    j["keep"] = to_json_1based(t.keep);
    j["s"] = t.s;
    j["e"] = t.e;
    j["mu"] = t.mu;
    return j;
}

// ---------------------------------------------------------------------------
// Attack config and result
// ---------------------------------------------------------------------------

inline AttackConfig attack_config_from_json(const Json& j)
{
    const std::string where = "attack";
    check_keys(j, {"norm", "eta_y", "eta_x", "step", "max_iters", "window", "tol", "attack_y",
                   "attack_X", "warm_start", "scaled_inner_step"},
               where);
    AttackConfig c;
    if (j.contains("norm")) c.budget.p = parse_norm(get_string(j, "norm", where));
    c.budget.eta_y = get_number_or(j, "eta_y", 0.0, where);
    c.budget.eta_x = get_number_or(j, "eta_x", 0.0, where);
    if (j.contains("step")) {
        const Json& s = j["step"];
        check_keys(s, {"rule", "c"}, where + ".step");
        if (s.contains("rule")) c.step.rule = parse_step_rule(get_string(s, "rule", where + ".step"));
        c.step.c = get_number_or(s, "c", c.step.c, where + ".step");
    }
    c.max_iters = static_cast<int>(get_int_or(j, "max_iters", c.max_iters, where));
    c.window = static_cast<int>(get_int_or(j, "window", c.window, where));
    c.tol = get_number_or(j, "tol", c.tol, where);
    c.attack_y = get_bool_or(j, "attack_y", true, where);
    c.attack_X = get_bool_or(j, "attack_X", c.budget.eta_x > 0.0, where);
    c.warm_start = get_bool_or(j, "warm_start", c.warm_start, where);
    c.scaled_inner_step = get_bool_or(j, "scaled_inner_step", c.scaled_inner_step, where);
    return c;
}

inline Json to_json(const AttackConfig& c)
{
    Json j;
    j["norm"] = to_string(c.budget.p);
    j["eta_y"] = c.budget.eta_y;
    j["eta_x"] = c.budget.eta_x;
    j["step"] = {{"rule", to_string(c.step.rule)}, {"c", c.step.c}};
    j["max_iters"] = c.max_iters;
    j["window"] = c.window;
    j["tol"] = c.tol;
    j["attack_y"] = c.attack_y;
    j["attack_X"] = c.attack_X;
    j["warm_start"] = c.warm_start;
    j["scaled_inner_step"] = c.scaled_inner_step;
    return j;
}

inline BarrierConfig barrier_config_from_json(const Json& j)
{
    const std::string where = "barrier";
    check_keys(j, {"t0", "t_mult", "t_max", "newton_tol", "max_newton", "gap_tol"}, where);
    BarrierConfig c;
    c.t0 = get_number_or(j, "t0", c.t0, where);
    c.t_mult = get_number_or(j, "t_mult", c.t_mult, where);
    c.t_max = get_number_or(j, "t_max", c.t_max, where);
    c.newton_tol = get_number_or(j, "newton_tol", c.newton_tol, where);
    c.max_newton = static_cast<int>(get_int_or(j, "max_newton", c.max_newton, where));
    c.gap_tol = get_number_or(j, "gap_tol", c.gap_tol, where);
    c.validate();
    return c;
}

inline Json to_json(const BarrierConfig& c)
{
    return {{"t0", c.t0},
            {"t_mult", c.t_mult},
            {"t_max", c.t_max},
            {"newton_tol", c.newton_tol},
            {"max_newton", c.max_newton},
            {"gap_tol", c.gap_tol}};
}

inline Json to_json(const AttackResult& r)
{
    Json j;
    j["iterations_used"] = r.iterations_used;
    j["converged"] = r.converged;
    j["aborted"] = r.aborted;
    j["abort_reason"] = r.abort_reason;
    j["objective_trace"] = r.objective_trace;
    j["beta_before"] = to_json(r.beta_before);
    j["beta_after"] = to_json(r.beta_after);
    j["y_adv"] = to_json(r.y_adv);
    j["X_adv"] = to_json(r.X_adv);
    return j;
}

inline void write_json(const std::filesystem::path& path, const Json& j)
{
    auto f = open_for_write(path);
    f << j.dump(2) << '\n';
    if (!f) throw IoError("write failed for '" + path.string() + "'");
}

inline Json read_json(const std::filesystem::path& path)
{
    try {
        return Json::parse(read_text(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

}  // namespace advlasso
