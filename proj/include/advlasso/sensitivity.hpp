#pragma once

// Gradients of the barrier solution beta(y, X) and of the attack objective,
// obtained by applying the implicit function theorem to the stationarity
// system g(y, X, beta, alpha, u) = 0 of the barrier problem at t_final.

#include "advlasso/objective.hpp"
#include "advlasso/solvers.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace advlasso {

struct SensitivityError : Error {
    SensitivityError(const std::string& what, double cond) : Error(what), condition_estimate(cond) {}
    double condition_estimate;
};

/// Row/column layout of the stacked unknowns (beta, alpha, u).
struct KktBlocks {
    Index m = 0;  // beta rows start at 0
    Index L = 0;  // alpha rows start at m
    Index u = 0;  // u rows start at m + L

    Index beta_offset() const { return 0; }
    Index alpha_offset() const { return m; }
    Index u_offset() const { return m + L; }
    Index size() const { return m + L + u; }
};

/// Jacobian of the barrier stationarity conditions, i.e. the Hessian of f_t
/// with respect to (beta, alpha, u).
struct KktJacobian {
    Matrix J;
    KktBlocks blocks;
};

/// d beta / d y (m x n) and d beta / d X stored as m x (n*m); column
/// l*n + k holds d beta / d X_{kl}, i.e. the column-major vec(X) order.
struct SolutionSensitivity {
    Matrix dbeta_dy;
    Matrix dbeta_dX;
    double condition_estimate = 1.0;

    Index n() const { return dbeta_dy.cols(); }
    Index m() const { return dbeta_dy.rows(); }
    auto dbeta_dXkl(Index k, Index l) const { return dbeta_dX.col(l * n() + k); }
};

namespace detail {

using ExtMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

/// Hessian of f_t in (beta, alpha, u) order, evaluated in Scalar arithmetic:
///   beta-beta   2 X^T X + diag(2(u^2 + beta^2) / (t del^2))
///                       + (2/t) [Del I + 2 beta_l beta_l^T] / Del^2 per group
///   beta-u      -4 u_i beta_i / (t del_i^2)
///   u-u         2 (u_i^2 + beta_i^2) / (t del_i^2)
///   beta-alpha  -4 alpha_l beta_l / (t Del_l^2)
///   alpha-alpha 2 (alpha_l^2 + ||beta_l||^2) / (t Del_l^2)
/// with del_i = u_i^2 - beta_i^2 and Del_l = alpha_l^2 - ||beta_l||^2.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>
barrier_hessian(const BarrierProblem& prob, const BarrierProblem::Point& p, const Matrix& X,
                double t_final, KktBlocks& b)
{
    using M = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    b.m = prob.m();
    b.L = prob.L();
    b.u = prob.has_u() ? prob.m() : 0;

    const Scalar t = t_final;
    const M Xs = X.cast<Scalar>();
    M J = M::Zero(b.size(), b.size());
    J.topLeftCorner(b.m, b.m) = Scalar(2) * Xs.transpose() * Xs;
    if (prob.has_u()) {
        for (Index i = 0; i < b.m; ++i) {
            // u and the larger slack are re-derived from the smaller slack so
            // that u^2 - beta^2 equals lo * hi in Scalar arithmetic.
            const Scalar bi = p.beta(i);
            Scalar lo = p.lo(i), hi = p.hi(i);
            if (lo <= hi) hi = lo + Scalar(2) * bi;
            else lo = hi - Scalar(2) * bi;
            const Scalar ui = bi + lo;
            const Scalar del = lo * hi;
            const Scalar den = t * del * del;
            const Index c = b.u_offset() + i;
            J(i, i) += Scalar(2) * (ui * ui + bi * bi) / den;
            J(c, c) = Scalar(2) * (ui * ui + bi * bi) / den;
            J(i, c) = J(c, i) = Scalar(-4) * ui * bi / den;
        }
    }
    if (prob.has_alpha()) {
        const auto& g = prob.groups();
        for (Index l = 0; l < b.L; ++l) {
            const Index off = g.offset(l), pl = g.size(l), c = b.alpha_offset() + l;
            const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> bl =
                p.beta.segment(off, pl).cast<Scalar>();
            const Scalar nb = bl.norm();
            const Scalar a = Scalar(p.cone(l)) + nb;
            const Scalar del = Scalar(p.cone(l)) * (a + nb);
            const Scalar den = t * del * del;
            auto blk = J.block(off, off, pl, pl);
            blk.diagonal().array() += Scalar(2) / (t * del);
            blk += (Scalar(4) / den) * (bl * bl.transpose());
            J.block(off, c, pl, 1) = (Scalar(-4) * a / den) * bl;
            J.block(c, off, 1, pl) = J.block(off, c, pl, 1).transpose();
            J(c, c) = Scalar(2) * (a * a + bl.squaredNorm()) / den;
        }
    }
    return J;
}

inline BarrierProblem::Point interior_point(const BarrierProblem& prob, const SolverSolution& s)
{
    const auto p = to_point(prob, s);
    if (!prob.strictly_interior(p)) throw InteriorError("solution is not strictly interior");
    if (!(s.t_final > 0.0)) throw ValueError("solution carries no barrier parameter");
    return p;
}

}  // namespace detail

inline KktJacobian assemble_jacobian(const ModelSpec& model, const Dataset& d,
                                     const SolverSolution& s)
{
    detail::BarrierProblem prob(d, model);
    const auto p = detail::interior_point(prob, s);
    KktJacobian out;
    out.J = detail::barrier_hessian<double>(prob, p, d.X(), s.t_final, out.blocks);
    return out;
}

namespace detail {

/// Symmetric indefinite factorization of J + ridge I in extended precision.
/// 2 X^T X sits next to barrier entries of order t, so in double precision
/// the data term is only kept to about eps * t.
class KktFactor {
public:
    static constexpr double default_ridge = 1e-10;

    KktFactor(const ModelSpec& model, const Dataset& d, const SolverSolution& s,
              double ridge = default_ridge)
    {
        BarrierProblem prob(d, model);
        const auto p = interior_point(prob, s);
        ExtMatrix J = barrier_hessian<long double>(prob, p, d.X(), s.t_final, blocks_);
        J.diagonal().array() += static_cast<long double>(ridge);
        ldlt_.compute(J);
        const double rc = ldlt_.info() == Eigen::Success ? static_cast<double>(ldlt_.rcond()) : 0.0;
        cond_ = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
        if (ldlt_.info() != Eigen::Success || !(rc > 1e-18))
            throw SensitivityError("KKT Jacobian is singular (condition estimate " +
                                       std::to_string(cond_) + ")",
                                   cond_);
    }

    const KktBlocks& blocks() const { return blocks_; }
    double condition_estimate() const { return cond_; }

    /// Top-left m x m block of J^{-1}.
    Matrix inverse_beta_block() const
    {
        ExtMatrix E = ExtMatrix::Zero(blocks_.size(), blocks_.m);
        E.topRows(blocks_.m).setIdentity();
        const ExtMatrix S = ldlt_.solve(E);
        return S.topRows(blocks_.m).cast<double>();
    }

    /// First m rows of J^{-1} rhs.
    Matrix solve_beta_rows(const Matrix& rhs) const
    {
        const ExtMatrix S = ldlt_.solve(rhs.cast<long double>());
        return S.topRows(blocks_.m).cast<double>();
    }

private:
    Eigen::LDLT<ExtMatrix> ldlt_;
    KktBlocks blocks_;
    double cond_ = 1.0;
};

/// d beta / d X from the beta block of J^{-1}:
///   dg_i/dX_{kl} = 2 delta_{il} (X beta - y)_k + 2 X_{ki} beta_l   (beta rows),
/// zero for the slack rows. The entries are the same for every model since
/// the barrier terms do not involve X, so column block l of d beta / d X is
/// -Minv (2 e_l r^T + 2 beta_l X^T).
inline Matrix dbeta_dX_from(const Matrix& Minv, const Dataset& d, const Vector& beta)
{
    const Index n = d.n(), m = d.m();
    const Vector r = d.X() * beta - d.y();
    const Matrix MXt = Minv * d.X().transpose();
    Matrix out(m, n * m);
    for (Index l = 0; l < m; ++l)
        out.middleCols(l * n, n) = -2.0 * (Minv.col(l) * r.transpose() + beta(l) * MXt);
    return out;
}

}  // namespace detail

/// dg/dy = [-2 X^T; 0]; returns the first m rows of -J^{-1} dg/dy.
inline Matrix grad_beta_wrt_y(const ModelSpec& model, const Dataset& d, const SolverSolution& s)
{
    const detail::KktFactor f(model, d, s);
    Matrix dg = Matrix::Zero(f.blocks().size(), d.n());
    dg.topRows(d.m()) = -2.0 * d.X().transpose();
    Matrix out = -f.solve_beta_rows(dg);
    if (!out.allFinite()) throw SensitivityError("non-finite d beta / d y", f.condition_estimate());
    return out;
}

/// First m rows of -J^{-1} dg/dX, m x (n*m) in column-major vec(X) order.
inline Matrix grad_beta_wrt_X(const ModelSpec& model, const Dataset& d, const SolverSolution& s)
{
    const detail::KktFactor f(model, d, s);
    Matrix out = detail::dbeta_dX_from(f.inverse_beta_block(), d, s.beta);
    if (!out.allFinite()) throw SensitivityError("non-finite d beta / d X", f.condition_estimate());
    return out;
}

/// Top-left m x m block of J^{-1} from the full factorization.
inline Matrix jacobian_inverse_beta_block(const ModelSpec& model, const Dataset& d,
                                          const SolverSolution& s)
{
    return detail::KktFactor(model, d, s).inverse_beta_block();
}

/// Both sensitivities through block elimination: the beta block of J^{-1} is
/// the inverse of the Schur complement R of the slack blocks, which the
/// solver already forms in closed form for its Newton steps. This is the
/// fast path used inside the attack loop.
inline SolutionSensitivity sensitivity(const ModelSpec& model, const Dataset& d,
                                       const SolverSolution& s, bool with_X = true)
{
    detail::BarrierProblem prob(d, model);
    const auto p = detail::interior_point(prob, s);
    const Matrix R = prob.reduce(p, s.t_final).R;
    Eigen::LLT<Matrix> llt(R);
    if (llt.info() != Eigen::Success)
        throw SensitivityError("reduced KKT matrix is not positive definite",
                               std::numeric_limits<double>::infinity());
    const Matrix Minv = llt.solve(Matrix::Identity(d.m(), d.m()));

    SolutionSensitivity out;
    out.condition_estimate = R.norm() * Minv.norm();
    out.dbeta_dy = 2.0 * Minv * d.X().transpose();
    if (with_X) out.dbeta_dX = detail::dbeta_dX_from(Minv, d, s.beta);
    if (!out.dbeta_dy.allFinite() || !out.dbeta_dX.allFinite())
        throw SensitivityError("non-finite sensitivities", out.condition_estimate);
    return out;
}

/// Closed form of d beta / d y for the lasso, (X^T X + D)^{-1} X^T with
/// D = (1/t) diag(1 / (u_i^2 + beta_i^2)).
inline Matrix lasso_dbeta_dy_closed_form(const Dataset& d, const SolverSolution& s)
{
    if (!s.u) throw ValueError("closed form requires the l1 slack u");
    const Vector& u = *s.u;
    Matrix A = d.X().transpose() * d.X();
    for (Index i = 0; i < d.m(); ++i)
        A(i, i) += 1.0 / (s.t_final * (u(i) * u(i) + s.beta(i) * s.beta(i)));
    return A.ldlt().solve(d.X().transpose());
}

/// Chain rule through the solution map:
///   grad_y f = (d beta/d y)^T H (beta - nu),
///   (grad_X f)_{kl} = (beta - nu)^T H d beta / d X_{kl}.
inline std::pair<Vector, Matrix> grad_attack_objective(const AttackObjective& obj,
                                                       const SolutionSensitivity& sens,
                                                       const SolverSolution& s)
{
    const Index m = sens.m(), n = sens.n();
    require_dims(obj.h.size() == m && s.beta.size() == m, "objective, sensitivity and solution");
    require_dims(sens.dbeta_dX.cols() == n * m || sens.dbeta_dX.size() == 0,
                 "d beta / d X must be m x (n*m)");
    const Vector w = objective_gradient(obj, s.beta);
    Vector gy = sens.dbeta_dy.transpose() * w;
    Matrix gX = Matrix::Zero(n, m);
    if (sens.dbeta_dX.size()) {
        const Vector flat = sens.dbeta_dX.transpose() * w;  // vec(grad_X), column-major
        gX = Eigen::Map<const Matrix>(flat.data(), n, m);
    }
    return {std::move(gy), std::move(gX)};
}

}  // namespace advlasso
