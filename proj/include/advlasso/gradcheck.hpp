#pragma once

// Central finite differences of the barrier solution map, used to verify the
// implicit-function gradients. Each perturbed problem is re-centred at the
// same t as the base solution, starting from the base solution.

#include "advlasso/objective.hpp"
#include "advlasso/sensitivity.hpp"
#include "advlasso/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace advlasso {

namespace detail {

using ExtVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

/// Stationarity residual of f_t with the data term and the barrier terms
/// accumulated in long double.
inline BarrierProblem::Gradient extended_gradient(const BarrierProblem& prob,
                                                  const BarrierProblem::Point& p, const Dataset& d,
                                                  const ModelSpec& model, double t_final)
{
    using LD = long double;
    const LD t = t_final;
    const Index m = d.m();
    const ExtVector r = d.X().cast<LD>() * p.beta.cast<LD>() - d.y().cast<LD>();
    ExtVector gb = LD(2) * (d.X().cast<LD>().transpose() * r);

    BarrierProblem::Gradient g;
    if (prob.has_u()) {
        const LD lam = model.l1_weight();
        g.u.resize(m);
        for (Index i = 0; i < m; ++i) {
            const LD del = LD(p.lo(i)) * LD(p.hi(i));
            gb(i) += LD(2) * LD(p.beta(i)) / (t * del);
            g.u(i) = static_cast<double>(lam - LD(2) * LD(p.u(i)) / (t * del));
        }
    }
    if (prob.has_alpha()) {
        const auto& G = prob.groups();
        g.alpha.resize(prob.L());
        for (Index l = 0; l < prob.L(); ++l) {
            const ExtVector bl = p.beta.segment(G.offset(l), G.size(l)).cast<LD>();
            const LD nb = bl.norm();
            const LD a = LD(p.cone(l)) + nb;
            const LD del = LD(p.cone(l)) * (a + nb);
            gb.segment(G.offset(l), G.size(l)) += (LD(2) / (t * del)) * bl;
            g.alpha(l) = static_cast<double>(LD(model.group_weight(l)) - LD(2) * a / (t * del));
        }
    }
    g.beta = gb.cast<double>();
    return g;
}

}  // namespace detail

/// Barrier solution for perturbed data at the base solution's t, started from
/// the base solution and refined with Newton steps whose residual is
/// evaluated in long double.
inline SolverSolution resolve_at(const Dataset& d, const ModelSpec& model,
                                 const SolverSolution& base, int polish_steps = 3)
{
    BarrierConfig c;
    c.t0 = base.t_final;
    c.t_max = base.t_final;
    c.gap_tol = std::numeric_limits<double>::infinity();
    c.newton_tol = 1e-14;
    SolverSolution s;
    try {
        s = solve(d, model, c, &base);
    } catch (const ConvergenceError& e) {
        s = e.last_iterate;  // stalled at the roundoff floor; the polish takes over
    }

    detail::BarrierProblem prob(d, model);
    auto p = detail::to_point(prob, s);
    for (int k = 0; k < polish_steps; ++k) {
        const auto g = detail::extended_gradient(prob, p, d, model, s.t_final);
        const auto dir = prob.newton_direction(prob.reduce(p, s.t_final), g, c.ridge);
        auto q = prob.step(p, dir, 1.0);
        if (!prob.strictly_interior(q)) break;
        p = std::move(q);
    }
    auto out = detail::to_solution(prob, p);
    out.t_final = s.t_final;
    out.kkt_norm = prob.gradient(p, s.t_final).norm();
    return out;
}

/// (beta(y + h e_k) - beta(y - h e_k)) / 2h for every k; m x n.
inline Matrix fd_dbeta_dy(const ModelSpec& model, const Dataset& d, const SolverSolution& base,
                          double h)
{
    Matrix out(d.m(), d.n());
    for (Index k = 0; k < d.n(); ++k) {
        Vector yp = d.y(), ym = d.y();
        yp(k) += h;
        ym(k) -= h;
        out.col(k) = (resolve_at(d.with_y(yp), model, base).beta -
                      resolve_at(d.with_y(ym), model, base).beta) /
                     (2.0 * h);
    }
    return out;
}

/// Same for every X_{kl}; m x (n*m), column l*n + k.
inline Matrix fd_dbeta_dX(const ModelSpec& model, const Dataset& d, const SolverSolution& base,
                          double h)
{
    const Index n = d.n(), m = d.m();
    Matrix out(m, n * m);
    for (Index l = 0; l < m; ++l)
        for (Index k = 0; k < n; ++k) {
            Matrix Xp = d.X(), Xm = d.X();
            Xp(k, l) += h;
            Xm(k, l) -= h;
            out.col(l * n + k) = (resolve_at(d.with_X(Xp), model, base).beta -
                                  resolve_at(d.with_X(Xm), model, base).beta) /
                                 (2.0 * h);
        }
    return out;
}

/// Finite differences of f(beta(y, X)) in y and in X (n x m).
inline std::pair<Vector, Matrix> fd_attack_gradient(const AttackObjective& obj, const ModelSpec& model,
                                                    const Dataset& d, const SolverSolution& base,
                                                    double h)
{
    auto f = [&](const Dataset& dd) { return objective_value(obj, resolve_at(dd, model, base).beta); };
    Vector gy(d.n());
    for (Index k = 0; k < d.n(); ++k) {
        Vector yp = d.y(), ym = d.y();
        yp(k) += h;
        ym(k) -= h;
        gy(k) = (f(d.with_y(yp)) - f(d.with_y(ym))) / (2.0 * h);
    }
    Matrix gX(d.n(), d.m());
    for (Index l = 0; l < d.m(); ++l)
        for (Index k = 0; k < d.n(); ++k) {
            Matrix Xp = d.X(), Xm = d.X();
            Xp(k, l) += h;
            Xm(k, l) -= h;
            gX(k, l) = (f(d.with_X(Xp)) - f(d.with_X(Xm))) / (2.0 * h);
        }
    return {gy, gX};
}

/// Largest |a - b| / max(|a|, |b|) over entries where either side exceeds
/// floor in magnitude.
inline double max_relative_error(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b,
                                 double floor = 1e-6)
{
    require_dims(a.rows() == b.rows() && a.cols() == b.cols(), "compared arrays differ in shape");
    double worst = 0.0;
    for (Index j = 0; j < a.cols(); ++j)
        for (Index i = 0; i < a.rows(); ++i) {
            const double x = a(i, j), y = b(i, j);
            const double s = std::max(std::abs(x), std::abs(y));
            if (s > floor) worst = std::max(worst, std::abs(x - y) / s);
        }
    return worst;
}

struct GradcheckEntry {
    std::string name;
    double max_rel_error;
};

/// Every implemented gradient against finite differences with step h.
inline std::vector<GradcheckEntry> gradcheck(const ModelSpec& model, const Dataset& d,
                                             const AttackTarget& target, double h,
                                             const BarrierConfig& cfg = {})
{
    const auto s = solve(d, model, cfg);
    const auto obj = compile_objective(target, s.beta);
    const auto sens = sensitivity(model, d, s);
    const auto [gy, gX] = grad_attack_objective(obj, sens, s);
    const auto [fy, fX] = fd_attack_gradient(obj, model, d, s, h);
    const Matrix fdy = fd_dbeta_dy(model, d, s, h);
    const Matrix fdX = fd_dbeta_dX(model, d, s, h);

    std::vector<GradcheckEntry> out;
    out.push_back({"dbeta_dy (full KKT)", max_relative_error(grad_beta_wrt_y(model, d, s), fdy)});
    out.push_back({"dbeta_dX (full KKT)", max_relative_error(grad_beta_wrt_X(model, d, s), fdX)});
    out.push_back({"dbeta_dy (reduced)", max_relative_error(sens.dbeta_dy, fdy)});
    out.push_back({"dbeta_dX (reduced)", max_relative_error(sens.dbeta_dX, fdX)});
    if (model.kind() == ModelKind::lasso)
        out.push_back({"dbeta_dy (lasso closed form)",
                       max_relative_error(lasso_dbeta_dy_closed_form(d, s), fdy)});
    out.push_back({"grad_y f", max_relative_error(gy, fy)});
    out.push_back({"grad_X f", max_relative_error(gX, fX)});
    return out;
}

}  // namespace advlasso
