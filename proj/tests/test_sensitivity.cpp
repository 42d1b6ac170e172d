#include "advlasso/gradcheck.hpp"
#include "advlasso/scenarios.hpp"
#include "advlasso/sensitivity.hpp"

#include <gtest/gtest.h>

using namespace advlasso;

namespace {

Dataset instance(std::uint64_t seed, Index n = 10, Index m = 15)
{
    return gen_synthetic(n, m, 5, 0.1, seed).data;
}

AttackTarget target_for(const Vector& beta)
{
    std::vector<Index> on, off;
    for (Index i = 0; i < beta.size(); ++i) (std::abs(beta(i)) > 1e-6 ? on : off).push_back(i);
    return AttackTarget::from_sets(beta.size(), {on.front()}, {off.front()});
}

std::vector<ModelSpec> models()
{
    const auto g = GroupPartition::uniform(5, 3);
    return {ModelSpec::lasso(1.0), ModelSpec::group(1.0, g), ModelSpec::sparse_group(0.5, 0.5, g)};
}

}  // namespace

TEST(Jacobian, ScalarInstanceMatchesHandEvaluation)
{
    Vector y(1);
    y << 2.0;
    const Dataset d(y, Matrix::Ones(1, 1));
    const auto model = ModelSpec::lasso(1.0);
    const auto s = solve(d, model);
    const auto jac = assemble_jacobian(model, d, s);
    ASSERT_EQ(jac.J.rows(), 2);
    const double b = s.beta(0), u = (*s.u)(0), t = s.t_final;
    const double del = s.slack_lower(0) * s.slack_upper(0);
    const double d1 = 2.0 * (u * u + b * b) / (t * del * del);
    const double d2 = -4.0 * u * b / (t * del * del);
    EXPECT_NEAR(jac.J(0, 0), 2.0 + d1, 1e-9 * (2.0 + d1));
    EXPECT_NEAR(jac.J(1, 1), d1, 1e-9 * d1);
    EXPECT_NEAR(jac.J(0, 1), d2, 1e-9 * std::abs(d2));
    EXPECT_NEAR(jac.J(1, 0), d2, 1e-9 * std::abs(d2));
}

TEST(Jacobian, SymmetricForEveryModel)
{
    const Dataset d = instance(1);
    for (const auto& model : models()) {
        const auto s = solve(d, model);
        const auto jac = assemble_jacobian(model, d, s);
        const double scale = jac.J.cwiseAbs().maxCoeff();
        EXPECT_LE((jac.J - jac.J.transpose()).cwiseAbs().maxCoeff(), 1e-10 * scale) << model.name();
        EXPECT_EQ(jac.J.rows(), jac.blocks.size());
    }
}

TEST(Jacobian, BlockLayoutPerModel)
{
    const Dataset d = instance(2);
    const auto ms = models();
    EXPECT_EQ(assemble_jacobian(ms[0], d, solve(d, ms[0])).J.rows(), 30);
    EXPECT_EQ(assemble_jacobian(ms[1], d, solve(d, ms[1])).J.rows(), 20);
    EXPECT_EQ(assemble_jacobian(ms[2], d, solve(d, ms[2])).J.rows(), 35);
}

TEST(Jacobian, SchurComplementIdentity)
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Dataset d = gen_synthetic(20, 30, 10, 0.1, seed).data;
        const auto model = ModelSpec::lasso(2.0);
        const auto s = solve(d, model);
        const Matrix top = jacobian_inverse_beta_block(model, d, s);
        Vector D(d.m());
        for (Index i = 0; i < d.m(); ++i) {
            const double u = (*s.u)(i), b = s.beta(i);
            D(i) = 1.0 / (s.t_final * (u * u + b * b));
        }
        Matrix M = 2.0 * d.X().transpose() * d.X();
        M.diagonal() += 2.0 * D;
        const Matrix ref = M.inverse();
        EXPECT_LE((top - ref).cwiseAbs().maxCoeff(), 1e-8 * (1.0 + ref.cwiseAbs().maxCoeff())) << "seed " << seed;
    }
}

TEST(Gradients, LassoClosedFormMatchesFullKkt)
{
    const Dataset d = instance(3);
    const auto model = ModelSpec::lasso(1.0);
    const auto s = solve(d, model);
    const Matrix a = grad_beta_wrt_y(model, d, s);
    const Matrix b = lasso_dbeta_dy_closed_form(d, s);
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-8 * (1.0 + b.cwiseAbs().maxCoeff()));
}

TEST(Gradients, ScalarOlsLimit)
{
    Vector y(1);
    y << 5.0;
    const Dataset d(y, Matrix::Ones(1, 1));
    const auto model = ModelSpec::lasso(0.1);
    const auto s = solve(d, model);
    EXPECT_NEAR(grad_beta_wrt_y(model, d, s)(0, 0), 1.0, 1e-6);
}

TEST(Gradients, FiniteDifferencesAllModels)
{
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const Dataset d = instance(10 + seed);
        for (const auto& model : models()) {
            const auto s = solve(d, model);
            const Matrix fdy = fd_dbeta_dy(model, d, s, 1e-5);
            const Matrix fdX = fd_dbeta_dX(model, d, s, 1e-5);
            EXPECT_LE(max_relative_error(grad_beta_wrt_y(model, d, s), fdy), 1e-3) << model.name();
            EXPECT_LE(max_relative_error(grad_beta_wrt_X(model, d, s), fdX), 1e-3) << model.name();
            const auto sens = sensitivity(model, d, s);
            EXPECT_LE(max_relative_error(sens.dbeta_dy, fdy), 1e-3) << model.name();
            EXPECT_LE(max_relative_error(sens.dbeta_dX, fdX), 1e-3) << model.name();
        }
    }
}

TEST(Gradients, LassoFiniteDifferencesAtCoarseStep)
{
    const Dataset d = gen_synthetic(5, 8, 3, 0.1, 21).data;
    const auto model = ModelSpec::lasso(1.0);
    const auto s = solve(d, model);
    EXPECT_LE(max_relative_error(grad_beta_wrt_X(model, d, s), fd_dbeta_dX(model, d, s, 1e-4)), 1e-3);
}

TEST(Gradients, AttackObjectiveMatchesFiniteDifferences)
{
    const Dataset d = instance(4);
    for (const auto& model : models()) {
        const auto s = solve(d, model);
        const auto obj = compile_objective(target_for(s.beta), s.beta);
        const auto [gy, gX] = grad_attack_objective(obj, sensitivity(model, d, s), s);
        const auto [fy, fX] = fd_attack_gradient(obj, model, d, s, 1e-5);
        EXPECT_LE(max_relative_error(gy, fy), 1e-3) << model.name();
        EXPECT_LE(max_relative_error(gX, fX), 1e-3) << model.name();
    }
}

TEST(Gradients, ZeroBetaLeavesResidualTerm)
{
    const Dataset d = instance(5);
    const double lam = 3.0 * (d.X().transpose() * d.y()).lpNorm<Eigen::Infinity>();
    const auto model = ModelSpec::lasso(lam);
    auto s = solve(d, model);
    const Matrix Minv = jacobian_inverse_beta_block(model, d, s);
    s.beta.setZero();
    const Matrix dX = detail::dbeta_dX_from(Minv, d, s.beta);
    const Vector r = -d.y();
    for (Index l = 0; l < d.m(); ++l)
        for (Index k = 0; k < d.n(); ++k) {
            const Vector ref = -Minv.col(l) * (2.0 * r(k));
            EXPECT_LE((dX.col(l * d.n() + k) - ref).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + ref.cwiseAbs().maxCoeff()));
        }
}

TEST(Gradients, UnitGroupsMatchLassoSensitivity)
{
    const Dataset d = instance(6);
    const auto lasso = ModelSpec::lasso(1.0);
    const auto group = ModelSpec::group(1.0, GroupPartition::singletons(d.m()));
    const Matrix a = grad_beta_wrt_X(lasso, d, solve(d, lasso));
    const Matrix b = grad_beta_wrt_X(group, d, solve(d, group));
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-6 * (1.0 + a.cwiseAbs().maxCoeff()));
}

TEST(Gradients, CenteredOrZeroWeightObjectiveHasZeroGradient)
{
    const Dataset d = instance(7);
    const auto model = ModelSpec::lasso(1.0);
    const auto s = solve(d, model);
    const auto sens = sensitivity(model, d, s);
    AttackObjective centered{Vector::Ones(d.m()), s.beta};
    auto [gy, gX] = grad_attack_objective(centered, sens, s);
    EXPECT_EQ(gy.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(gX.cwiseAbs().maxCoeff(), 0.0);
    AttackObjective zero{Vector::Zero(d.m()), Vector::Ones(d.m())};
    std::tie(gy, gX) = grad_attack_objective(zero, sens, s);
    EXPECT_EQ(gy.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(gX.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Gradients, DimensionMismatchRejected)
{
    const Dataset d = instance(8);
    const auto model = ModelSpec::lasso(1.0);
    const auto s = solve(d, model);
    AttackObjective bad{Vector::Ones(3), Vector::Zero(3)};
    EXPECT_THROW(grad_attack_objective(bad, sensitivity(model, d, s), s), DimensionError);
}

TEST(Gradients, FiniteEntries)
{
    const Dataset d = instance(9);
    for (const auto& model : models()) {
        const auto sens = sensitivity(model, d, solve(d, model));
        EXPECT_TRUE(sens.dbeta_dy.allFinite());
        EXPECT_TRUE(sens.dbeta_dX.allFinite());
    }
}
