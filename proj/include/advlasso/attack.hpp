#pragma once

// Projected-gradient poisoning attack on (y, X). Each iteration takes a unit
// gradient step, projects it onto the budget ball around the clean data and
// moves a fraction alpha_t of the way toward that projection.

#include "advlasso/objective.hpp"
#include "advlasso/projections.hpp"
#include "advlasso/sensitivity.hpp"
#include "advlasso/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace advlasso {

enum class StepRule { inv_sqrt, inv, constant };

inline std::string to_string(StepRule r)
{
    switch (r) {
    case StepRule::inv_sqrt: return "inv_sqrt";
    case StepRule::inv: return "inv";
    case StepRule::constant: return "constant";
    }
    return "?";
}

inline StepRule parse_step_rule(const std::string& s)
{
    if (s == "inv_sqrt") return StepRule::inv_sqrt;
    if (s == "inv") return StepRule::inv;
    if (s == "constant") return StepRule::constant;
    throw ValueError("unknown step rule '" + s + "' (expected inv_sqrt, inv or constant)");
}

/// alpha_t = c / sqrt(t), c / t or c, for t = 1, 2, ...; capped at 1 so the
/// update stays a convex combination.
struct StepSchedule {
    StepRule rule = StepRule::inv_sqrt;
    double c = 2.0;

    double raw(int t) const
    {
        const double tt = static_cast<double>(t);
        switch (rule) {
        case StepRule::inv_sqrt: return c / std::sqrt(tt);
        case StepRule::inv: return c / tt;
        case StepRule::constant: return c;
        }
        return c;
    }

    double operator()(int t) const { return std::min(1.0, raw(t)); }
};

struct AttackConfig {
    StepSchedule step;
    int max_iters = 200;
    int window = 5;
    double tol = 1e-6;
    Budget budget;
    bool attack_y = true;
    bool attack_X = false;
    bool warm_start = false;         // start each re-solve from the previous solution
    bool scaled_inner_step = false;  // Proj(y - alpha_t grad) instead of Proj(y - grad)

    bool effective_y() const { return attack_y && budget.eta_y > 0.0; }
    bool effective_X() const { return attack_X && budget.eta_x > 0.0; }

    void validate() const
    {
        if (!(step.c > 0.0) || !std::isfinite(step.c)) throw ValueError("step constant must be > 0");
        if (max_iters < 1) throw ValueError("max_iters must be >= 1");
        if (window < 1) throw ValueError("convergence window must be >= 1");
        if (!(tol >= 0.0)) throw ValueError("convergence tolerance must be >= 0");
        if (!attack_y && !attack_X) throw ValueError("enable at least one of attack_y / attack_X");
        budget.validate();
    }
};

struct AttackResult {
    Vector y_adv;
    Matrix X_adv;
    std::vector<double> objective_trace;  // f at the clean data, then after every update
    Vector beta_before;
    Vector beta_after;
    int iterations_used = 0;
    bool converged = false;
    bool aborted = false;
    std::string abort_reason;
};

/// True once the last w objective values span less than tol (1 + |last|).
inline bool convergence_check(const std::vector<double>& trace, int w, double tol)
{
    if (w < 1) throw ValueError("convergence window must be >= 1");
    if (trace.size() < static_cast<std::size_t>(w)) return false;
    const auto first = trace.end() - w;
    const auto [lo, hi] = std::minmax_element(first, trace.end());
    return *hi - *lo < tol * (1.0 + std::abs(trace.back()));
}

namespace detail {

inline void check_feasible(const Vector& center, const Vector& v, NormKind p, double eta,
                           const char* what)
{
    if (norm_of(p, v - center) > eta + 1e-9)
        throw Error(std::string("attack iterate left the ") + what + " budget ball");
}

}  // namespace detail

inline AttackResult run_attack(const Dataset& d0, const ModelSpec& model,
                               const AttackTarget& target, const AttackConfig& cfg,
                               const BarrierConfig& barrier = {})
{
    cfg.validate();
    const bool do_y = cfg.effective_y(), do_X = cfg.effective_X();
    const NormKind p = cfg.budget.p;

    AttackResult res;
    SolverSolution sol = solve(d0, model, barrier);
    const AttackObjective obj = compile_objective(target, sol.beta);
    res.beta_before = sol.beta;
    res.y_adv = d0.y();
    res.X_adv = d0.X();
    res.objective_trace.push_back(objective_value(obj, sol.beta));

    Dataset cur = d0;
    for (int t = 1; (do_y || do_X) && t <= cfg.max_iters; ++t) {
        try {
            const auto sens = sensitivity(model, cur, sol, do_X);
            const auto [gy, gX] = grad_attack_objective(obj, sens, sol);
            const double a = cfg.step(t);
            const double inner = cfg.scaled_inner_step ? a : 1.0;

            Vector y = cur.y();
            Matrix X = cur.X();
            if (do_y) {
                const Vector proj = project_ball(d0.y(), p, cfg.budget.eta_y, Vector(y - inner * gy));
                y = (1.0 - a) * y + a * proj;
                detail::check_feasible(d0.y(), y, p, cfg.budget.eta_y, "y");
            }
            if (do_X) {
                const Matrix proj = project_ball(d0.X(), p, cfg.budget.eta_x, Matrix(X - inner * gX));
                X = (1.0 - a) * X + a * proj;
                const Matrix diff = X - d0.X();
                if (norm_of(p, Eigen::Map<const Vector>(diff.data(), diff.size())) >
                    cfg.budget.eta_x + 1e-9)
                    throw Error("attack iterate left the X budget ball");
            }
            cur = Dataset(std::move(y), std::move(X));
            sol = solve(cur, model, barrier, cfg.warm_start ? &sol : nullptr);
        } catch (const Error& e) {
            res.aborted = true;
            res.abort_reason = "iteration " + std::to_string(t) + ": " + e.what();
            break;
        }
        res.iterations_used = t;
        res.y_adv = cur.y();
        res.X_adv = cur.X();
        res.objective_trace.push_back(objective_value(obj, sol.beta));
        if (convergence_check(res.objective_trace, cfg.window, cfg.tol)) {
            res.converged = true;
            break;
        }
    }
    res.beta_after = sol.beta;
    return res;
}

}  // namespace advlasso
