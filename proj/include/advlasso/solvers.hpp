#pragma once

#include "advlasso/types.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace advlasso {

/// Central-path schedule and inner Newton controls.
struct BarrierConfig {
    double t0 = 1.0;
    double t_mult = 10.0;
    double t_max = 1e9;
    double newton_tol = 1e-9;   // relative to (1 + ||2 X^T y||_inf)
    int max_newton = 100;        // per centering step
    double armijo = 1e-4;
    double backtrack = 0.5;
    double boundary_fraction = 0.99;
    double ridge = 1e-10;
    double gap_tol = 1e-6;       // barrier gap bound target, relative to (1 + objective)

    void validate() const
    {
        if (!(t0 > 0.0) || !(t_mult > 1.0) || !(t_max >= t0) || !(newton_tol > 0.0) ||
            max_newton < 1)
            throw ValueError("invalid barrier config: need t0 > 0, t_mult > 1, t_max >= t0, "
                             "newton_tol > 0, max_newton >= 1");
        if (!(boundary_fraction > 0.0 && boundary_fraction < 1.0))
            throw ValueError("boundary_fraction must lie in (0, 1)");
    }
};

/// One point of the central path: barrier parameter and true objective.
struct PathPoint {
    double t;
    double objective;
    int newton_iters;
};

/// Barrier solution. u is present when the model has an l1 term, alpha when
/// it has a group term.
struct SolverSolution {
    Vector beta;
    std::optional<Vector> u;
    std::optional<Vector> alpha;
    double t_final = 0.0;
    double kkt_norm = std::numeric_limits<double>::infinity();
    int newton_iters = 0;
    std::vector<PathPoint> path;

    // Constraint slacks u - beta, u + beta and alpha_l - ||beta_l||, tracked
    // at full precision. Near the end of the central path these are far
    // smaller than u or alpha and cannot be recovered by subtraction.
    Vector slack_lower;
    Vector slack_upper;
    Vector slack_cone;
};

struct ConvergenceError : Error {
    ConvergenceError(const std::string& what, SolverSolution last)
        : Error(what), last_iterate(std::move(last))
    {
    }
    SolverSolution last_iterate;
};

namespace detail {

/// Barrier objective f_t(beta, alpha, u) shared by the three lower-level
/// problems:
///   ||y - X beta||^2 + sum_l w_l alpha_l + lam_u sum_i u_i
///     - (1/t) [ sum_l log(alpha_l^2 - ||beta_l||^2) + sum_i log(u_i^2 - beta_i^2) ]
/// Lasso uses only u, group lasso only alpha, sparse group both.
class BarrierProblem {
public:
    BarrierProblem(const Dataset& d, const ModelSpec& model)
        : X_(d.X()), y_(d.y()), model_(model)
    {
        model.check_dimension(d.m());
        m_ = d.m();
        gram2_ = 2.0 * X_.transpose() * X_;
        Xty2_ = 2.0 * X_.transpose() * y_;
        lam_u_ = model.l1_weight();
        if (const GroupPartition* g = model.groups()) {
            groups_ = *g;
            has_alpha_ = true;
            w_.resize(g->num_groups());
            for (Index l = 0; l < g->num_groups(); ++l) w_(l) = model.group_weight(l);
        }
        has_u_ = lam_u_ > 0.0;
    }

    template <typename V>
    auto block(V&& v, Index l) const
    {
        return v.segment(groups_.offset(l), groups_.size(l));
    }

    Index m() const { return m_; }
    Index L() const { return has_alpha_ ? groups_.num_groups() : 0; }
    bool has_u() const { return has_u_; }
    bool has_alpha() const { return has_alpha_; }
    const GroupPartition& groups() const { return groups_; }
    double scale() const { return 1.0 + Xty2_.lpNorm<Eigen::Infinity>(); }

    /// Barrier degree: each log(a^2 - ||b||^2) term counts 2.
    double barrier_degree() const { return 2.0 * static_cast<double>(L() + (has_u_ ? m_ : 0)); }

    /// Iterate. lo = u - beta, hi = u + beta and cone = alpha - ||beta_l|| are
    /// the primary storage for the slacks; u and alpha are derived from them.
    struct Point {
        Vector beta, alpha, u;
        Vector lo, hi, cone;
    };

    Point initial_point() const
    {
        Point p;
        p.beta = Vector::Zero(m_);
        if (has_alpha_) {
            p.alpha = Vector::Ones(L());
            p.cone = Vector::Ones(L());
        }
        if (has_u_) {
            p.u = Vector::Ones(m_);
            p.lo = Vector::Ones(m_);
            p.hi = Vector::Ones(m_);
        }
        return p;
    }

    /// Point from (beta, u, alpha), forming slacks by subtraction.
    Point make_point(const Vector& beta, const Vector* u, const Vector* alpha) const
    {
        Point p;
        p.beta = beta;
        if (has_u_) {
            p.u = *u;
            p.lo = p.u - p.beta;
            p.hi = p.u + p.beta;
        }
        if (has_alpha_) {
            p.alpha = *alpha;
            p.cone.resize(L());
            for (Index l = 0; l < L(); ++l) p.cone(l) = p.alpha(l) - block(p.beta, l).norm();
        }
        return p;
    }

    bool strictly_interior(const Point& p) const
    {
        if (has_u_ && !((p.lo.array() > 0.0).all() && (p.hi.array() > 0.0).all())) return false;
        if (has_alpha_ && !(p.cone.array() > 0.0).all()) return false;
        return true;
    }

    /// f_t at p; +inf outside the barrier domain.
    double value(const Point& p, double t) const
    {
        if (!strictly_interior(p)) return std::numeric_limits<double>::infinity();
        double f = (y_ - X_ * p.beta).squaredNorm();
        double logsum = 0.0;
        if (has_u_) {
            f += lam_u_ * p.u.sum();
            for (Index i = 0; i < m_; ++i) logsum += std::log(p.lo(i)) + std::log(p.hi(i));
        }
        if (has_alpha_) {
            f += w_.dot(p.alpha);
            for (Index l = 0; l < L(); ++l) logsum += std::log(cone_slack(p, l));
        }
        return f - logsum / t;
    }

    /// Penalized objective without the barrier (the problem being solved).
    double true_objective(const Vector& beta) const
    {
        return (y_ - X_ * beta).squaredNorm() + model_.penalty(beta);
    }

    struct Gradient {
        Vector beta, alpha, u;
        double norm() const
        {
            double s = beta.squaredNorm();
            if (alpha.size()) s += alpha.squaredNorm();
            if (u.size()) s += u.squaredNorm();
            return std::sqrt(s);
        }
        double dot(const Gradient& o) const
        {
            double s = beta.dot(o.beta);
            if (alpha.size()) s += alpha.dot(o.alpha);
            if (u.size()) s += u.dot(o.u);
            return s;
        }
    };

    Gradient gradient(const Point& p, double t) const
    {
        Gradient g;
        g.beta = gram2_ * p.beta - Xty2_;
        if (has_u_) {
            g.u.resize(m_);
            for (Index i = 0; i < m_; ++i) {
                const double del = box_slack(p, i);
                g.beta(i) += 2.0 * p.beta(i) / (t * del);
                g.u(i) = lam_u_ - 2.0 * p.u(i) / (t * del);
            }
        }
        if (has_alpha_) {
            g.alpha.resize(L());
            for (Index l = 0; l < L(); ++l) {
                const double del = cone_slack(p, l);
                block(g.beta, l) += (2.0 / (t * del)) * block(p.beta, l);
                g.alpha(l) = w_(l) - 2.0 * p.alpha(l) / (t * del);
            }
        }
        return g;
    }

    /// Newton system with alpha and u eliminated onto beta. The Schur
    /// complements of the slack blocks are formed in closed form:
    ///   box:  (2/t) / (u_i^2 + beta_i^2)
    ///   cone: (2/t) / Delta_l I - (4/t) beta_l beta_l^T / (Delta_l (alpha_l^2 + ||beta_l||^2))
    /// so the O(t) barrier curvature never passes through a subtraction.
    struct Reduced {
        Matrix R;                  // 2 X^T X + eliminated barrier curvature
        Vector uu, ku;             // d2/du_i^2 and (d2/dbeta_i du_i) / uu
        Vector aa;                 // d2/dalpha_l^2
        std::vector<Vector> ka;    // (d2/dbeta_l dalpha_l) / aa, length p_l
    };

    Reduced reduce(const Point& p, double t) const
    {
        Reduced r;
        r.R = gram2_;
        if (has_u_) {
            r.uu.resize(m_);
            r.ku.resize(m_);
            for (Index i = 0; i < m_; ++i) {
                const double del = box_slack(p, i);
                const double b = p.beta(i), u = p.u(i);
                const double q = u * u + b * b;
                r.uu(i) = 2.0 * q / (t * del * del);
                r.ku(i) = -2.0 * u * b / q;
                r.R(i, i) += 2.0 / (t * q);
            }
        }
        if (has_alpha_) {
            r.aa.resize(L());
            r.ka.resize(static_cast<std::size_t>(L()));
            for (Index l = 0; l < L(); ++l) {
                const double del = cone_slack(p, l);
                const auto bl = block(p.beta, l);
                const double a = p.alpha(l);
                const double q = a * a + bl.squaredNorm();
                const Index off = groups_.offset(l), pl = groups_.size(l);
                auto blk = r.R.block(off, off, pl, pl);
                blk.diagonal().array() += 2.0 / (t * del);
                blk.noalias() -= (4.0 / (t * del * q)) * (bl * bl.transpose());
                r.aa(l) = 2.0 * q / (t * del * del);
                r.ka[static_cast<std::size_t>(l)] = (-2.0 * a / q) * bl;
            }
        }
        return r;
    }

    Gradient newton_direction(const Reduced& r, const Gradient& g, double ridge) const
    {
        Vector rhs = -g.beta;
        if (has_u_) rhs += r.ku.cwiseProduct(g.u);
        if (has_alpha_)
            for (Index l = 0; l < L(); ++l)
                block(rhs, l) += r.ka[static_cast<std::size_t>(l)] * g.alpha(l);

        Gradient d;
        d.beta = solve_spd(r.R, rhs, ridge);
        if (has_u_) d.u = -g.u.cwiseQuotient(r.uu) - r.ku.cwiseProduct(d.beta);
        if (has_alpha_) {
            d.alpha.resize(L());
            for (Index l = 0; l < L(); ++l)
                d.alpha(l) = -g.alpha(l) / r.aa(l) -
                             r.ka[static_cast<std::size_t>(l)].dot(block(d.beta, l));
        }
        return d;
    }

    /// Largest s such that p + s d is still strictly interior (may be +inf).
    double max_step(const Point& p, const Gradient& d) const
    {
        double smax = std::numeric_limits<double>::infinity();
        if (has_u_) {
            for (Index i = 0; i < m_; ++i) {
                const double lo = p.lo(i), dlo = d.u(i) - d.beta(i);
                const double hi = p.hi(i), dhi = d.u(i) + d.beta(i);
                if (dlo < 0.0) smax = std::min(smax, -lo / dlo);
                if (dhi < 0.0) smax = std::min(smax, -hi / dhi);
            }
        }
        if (has_alpha_) {
            for (Index l = 0; l < L(); ++l) {
                const auto b = block(p.beta, l);
                const auto db = block(d.beta, l);
                const double a = p.alpha(l), da = d.alpha(l);
                // q(s) = (a + s da)^2 - ||b + s db||^2 = A s^2 + B s + C, C > 0
                const double A = da * da - db.squaredNorm();
                const double B = 2.0 * (a * da - b.dot(db));
                const double C = cone_slack(p, l);
                smax = std::min(smax, smallest_positive_root(A, B, C));
                if (da < 0.0) smax = std::min(smax, -a / da);
            }
        }
        return smax;
    }

    Point step(const Point& p, const Gradient& d, double s) const
    {
        Point q;
        q.beta = p.beta + s * d.beta;
        if (has_u_) {
            q.lo = p.lo + s * (d.u - d.beta);
            q.hi = p.hi + s * (d.u + d.beta);
            q.u = 0.5 * (q.lo + q.hi);
        }
        if (has_alpha_) {
            q.cone.resize(L());
            q.alpha.resize(L());
            for (Index l = 0; l < L(); ++l) {
                const auto b0 = block(p.beta, l);
                const auto db = block(d.beta, l);
                const double n0 = b0.norm();
                const double n1 = block(q.beta, l).norm();
                // ||b0 + s db|| - ||b0|| without cancellation
                const double dn = (n0 + n1) > 0.0
                                      ? s * (2.0 * b0.dot(db) + s * db.squaredNorm()) / (n0 + n1)
                                      : 0.0;
                q.cone(l) = p.cone(l) + s * d.alpha(l) - dn;
                q.alpha(l) = q.cone(l) + n1;
            }
        }
        return q;
    }

    /// u_i^2 - beta_i^2
    double box_slack(const Point& p, Index i) const { return p.lo(i) * p.hi(i); }

    /// alpha_l^2 - ||beta_l||^2
    double cone_slack(const Point& p, Index l) const
    {
        return p.cone(l) * (p.alpha(l) + block(p.beta, l).norm());
    }

    static Vector solve_spd(const Matrix& A, const Vector& b, double ridge)
    {
        Eigen::LLT<Matrix> llt(A);
        if (llt.info() == Eigen::Success) return llt.solve(b);
        Matrix Ar = A;
        Ar.diagonal().array() += ridge * (1.0 + A.diagonal().cwiseAbs().maxCoeff());
        Eigen::LDLT<Matrix> ldlt(Ar);
        return ldlt.solve(b);
    }

private:
    static double smallest_positive_root(double A, double B, double C)
    {
        constexpr double inf = std::numeric_limits<double>::infinity();
        const double tiny = 1e-300;
        if (std::abs(A) < tiny) {
            if (B < 0.0) return -C / B;
            return inf;
        }
        const double disc = B * B - 4.0 * A * C;
        if (disc < 0.0) return inf;
        const double sq = std::sqrt(disc);
        const double qq = -0.5 * (B + (B >= 0.0 ? sq : -sq));
        double r1 = qq / A;
        double r2 = (qq != 0.0) ? C / qq : inf;
        double best = inf;
        if (r1 > 0.0) best = std::min(best, r1);
        if (r2 > 0.0) best = std::min(best, r2);
        return best;
    }

    Matrix X_;
    Vector y_;
    ModelSpec model_;
    Index m_ = 0;
    Matrix gram2_;
    Vector Xty2_;
    double lam_u_ = 0.0;
    bool has_u_ = false;
    bool has_alpha_ = false;
    GroupPartition groups_;
    Vector w_;
};

inline SolverSolution to_solution(const BarrierProblem& prob, const BarrierProblem::Point& p)
{
    SolverSolution s;
    s.beta = p.beta;
    if (prob.has_u()) {
        s.u = p.u;
        s.slack_lower = p.lo;
        s.slack_upper = p.hi;
    }
    if (prob.has_alpha()) {
        s.alpha = p.alpha;
        s.slack_cone = p.cone;
    }
    return s;
}

/// Rebuilds an iterate from a solution. Stored slacks are used when present;
/// otherwise they are formed from (beta, u, alpha).
inline BarrierProblem::Point to_point(const BarrierProblem& prob, const SolverSolution& s)
{
    require_dims(s.beta.size() == prob.m(), "solution length differs from feature count");
    if (prob.has_u()) {
        if (!s.u) throw InteriorError("solution lacks the l1 slack u");
        require_dims(s.u->size() == prob.m(), "u length");
    }
    if (prob.has_alpha()) {
        if (!s.alpha) throw InteriorError("solution lacks the conic slack alpha");
        require_dims(s.alpha->size() == prob.L(), "alpha length");
    }
    auto p = prob.make_point(s.beta, s.u ? &*s.u : nullptr, s.alpha ? &*s.alpha : nullptr);
    if (prob.has_u() && s.slack_lower.size() == prob.m() && s.slack_upper.size() == prob.m()) {
        p.lo = s.slack_lower;
        p.hi = s.slack_upper;
    }
    if (prob.has_alpha() && s.slack_cone.size() == prob.L()) p.cone = s.slack_cone;
    return p;
}

/// Damped Newton centering at fixed t. Returns the number of iterations, or
/// -1 when the gradient tolerance was not reached.
inline int center(const BarrierProblem& prob, BarrierProblem::Point& p, double t,
                  const BarrierConfig& cfg, double& grad_norm)
{
    const double tol = cfg.newton_tol * prob.scale();
    double f = prob.value(p, t);
    for (int it = 0; it < cfg.max_newton; ++it) {
        const auto g = prob.gradient(p, t);
        grad_norm = g.norm();
        if (grad_norm <= tol) return it;

        const auto d = prob.newton_direction(prob.reduce(p, t), g, cfg.ridge);
        const double slope = g.dot(d);
        if (!(slope < 0.0)) return -1;

        double s = std::min(1.0, cfg.boundary_fraction * prob.max_step(p, d));
        // Below roundoff in f the Armijo test is meaningless; take the
        // (boundary-capped) Newton step and let the gradient test decide.
        const bool in_noise = -slope <= 1e-13 * (1.0 + std::abs(f));
        BarrierProblem::Point q = prob.step(p, d, s);
        double fq = prob.value(q, t);
        if (!in_noise) {
            int shrinks = 0;
            while (!(fq <= f + cfg.armijo * s * slope)) {
                s *= cfg.backtrack;
                if (++shrinks > 60) return -1;
                q = prob.step(p, d, s);
                fq = prob.value(q, t);
            }
        } else if (!std::isfinite(fq)) {
            return -1;
        }
        p = std::move(q);
        f = fq;
    }
    grad_norm = prob.gradient(p, t).norm();
    return grad_norm <= tol ? cfg.max_newton : -1;
}

inline SolverSolution solve_barrier(const Dataset& d, const ModelSpec& model,
                                    const BarrierConfig& cfg, const SolverSolution* warm)
{
    cfg.validate();
    BarrierProblem prob(d, model);
    auto p = prob.initial_point();
    if (warm) {
        auto w = to_point(prob, *warm);
        if (prob.strictly_interior(w)) p = std::move(w);
    }

    std::vector<PathPoint> path;
    int total = 0;
    double t = cfg.t0;
    double grad_norm = 0.0;
    for (;;) {
        const int its = center(prob, p, t, cfg, grad_norm);
        total += std::max(its, 0);
        const double obj = prob.true_objective(p.beta);
        path.push_back({t, obj, its});
        const bool last = t >= cfg.t_max &&
                          prob.barrier_degree() / t <= cfg.gap_tol * (1.0 + std::abs(obj));
        if (its < 0 && last) {
            auto s = to_solution(prob, p);
            s.t_final = t;
            s.kkt_norm = grad_norm;
            s.newton_iters = total;
            s.path = std::move(path);
            throw ConvergenceError("interior-point centering stalled at t = " + std::to_string(t) +
                                       " with gradient norm " + std::to_string(grad_norm),
                                   std::move(s));
        }
        if (last) break;
        t *= cfg.t_mult;
    }

    auto s = to_solution(prob, p);
    s.t_final = t;
    s.kkt_norm = grad_norm;
    s.newton_iters = total;
    s.path = std::move(path);
    return s;
}

}  // namespace detail

/// Lower-level solve for any model variant, following the central path from
/// cfg.t0 until t >= cfg.t_max and the barrier gap bound is met.
inline SolverSolution solve(const Dataset& d, const ModelSpec& model, const BarrierConfig& cfg = {},
                            const SolverSolution* warm_start = nullptr)
{
    return detail::solve_barrier(d, model, cfg, warm_start);
}

/// argmin ||y - X beta||^2 + lambda ||beta||_1.
inline SolverSolution solve_lasso(const Dataset& d, double lambda, const BarrierConfig& cfg = {})
{
    return solve(d, ModelSpec::lasso(lambda), cfg);
}

/// argmin ||y - X beta||^2 + lambda sum_l sqrt(p_l) ||beta_l||_2.
inline SolverSolution solve_group_lasso(const Dataset& d, const ModelSpec& spec,
                                        const BarrierConfig& cfg = {})
{
    if (spec.kind() != ModelKind::group) throw ValueError("solve_group_lasso needs a group model");
    return solve(d, spec, cfg);
}

/// argmin ||y - X beta||^2 + lambda1 sum_l sqrt(p_l) ||beta_l||_2 + lambda2 ||beta||_1.
inline SolverSolution solve_sparse_group_lasso(const Dataset& d, const ModelSpec& spec,
                                               const BarrierConfig& cfg = {})
{
    if (spec.kind() != ModelKind::sparse_group)
        throw ValueError("solve_sparse_group_lasso needs a sparse-group model");
    return solve(d, spec, cfg);
}

/// Smallest penalty accepted when one of the sparse-group weights is meant
/// to vanish.
inline double penalty_floor(const Dataset& d)
{
    return 1e-8 * (2.0 * d.X().transpose() * d.y()).lpNorm<Eigen::Infinity>();
}

/// Sparse-group model with either weight clamped to penalty_floor.
inline ModelSpec sparse_group_with_floor(const Dataset& d, double lambda1, double lambda2,
                                         GroupPartition g)
{
    const double fl = penalty_floor(d);
    return ModelSpec::sparse_group(std::max(lambda1, fl), std::max(lambda2, fl), std::move(g));
}

/// Euclidean norm of the stacked barrier stationarity conditions at
/// (beta, alpha, u, t_final).
inline double kkt_residual(const ModelSpec& model, const Dataset& d, const SolverSolution& s)
{
    detail::BarrierProblem prob(d, model);
    const auto p = detail::to_point(prob, s);
    if (!prob.strictly_interior(p)) throw InteriorError("solution is not strictly interior");
    if (!(s.t_final > 0.0)) throw ValueError("solution carries no barrier parameter");
    return prob.gradient(p, s.t_final).norm();
}

/// Stationarity tolerance the solver guarantees for this dataset.
inline double kkt_tolerance(const Dataset& d, const BarrierConfig& cfg = {})
{
    return cfg.newton_tol * (1.0 + (2.0 * d.X().transpose() * d.y()).lpNorm<Eigen::Infinity>());
}

}  // namespace advlasso
