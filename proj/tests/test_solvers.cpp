#include "advlasso/objective.hpp"
#include "advlasso/scenarios.hpp"
#include "advlasso/solvers.hpp"
#include "oracles/regression_oracles.hpp"

#include <gtest/gtest.h>

using namespace advlasso;

namespace {

Dataset instance(std::uint64_t seed, Index n = 20, Index m = 30)
{
    return gen_synthetic(n, m, 10, 0.1, seed).data;
}

double rel_gap(double a, double b) { return std::abs(a - b) / (1.0 + std::abs(b)); }

}  // namespace

// ---------------------------------------------------------------------------
// Model core
// ---------------------------------------------------------------------------

TEST(ModelCore, DatasetRejectsMismatchedShapes)
{
    EXPECT_THROW(Dataset(Vector::Zero(3), Matrix::Zero(4, 2)), DimensionError);
}

TEST(ModelCore, PartitionMustCoverFeatures)
{
    const auto model = ModelSpec::group(1.0, GroupPartition::uniform(3, 2));
    EXPECT_THROW(model.check_dimension(7), PartitionError);
    EXPECT_NO_THROW(model.check_dimension(6));
}

TEST(ModelCore, PenaltiesMustBePositive)
{
    EXPECT_THROW(ModelSpec::lasso(0.0), ValueError);
    EXPECT_THROW(ModelSpec::sparse_group(1.0, -1.0, GroupPartition::uniform(2, 2)), ValueError);
}

TEST(ModelCore, GroupWeightScalesWithSqrtSize)
{
    const auto model = ModelSpec::group(2.0, GroupPartition({1, 4}));
    EXPECT_DOUBLE_EQ(model.group_weight(0), 2.0);
    EXPECT_DOUBLE_EQ(model.group_weight(1), 4.0);
}

TEST(ModelCore, ObjectiveValueHandExample)
{
    AttackObjective obj{Vector(2), Vector::Zero(2)};
    obj.h << 1.0, -1.0;
    Vector beta(2);
    beta << 2.0, 1.0;
    EXPECT_DOUBLE_EQ(objective_value(obj, beta), 1.5);
    EXPECT_DOUBLE_EQ(objective_value(obj, obj.nu), 0.0);
}

TEST(ModelCore, ObjectiveValueMatchesScalarLoop)
{
    Rng rng(5);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 50; ++trial) {
        AttackObjective obj{Vector(9), Vector(9)};
        Vector beta(9);
        for (Index i = 0; i < 9; ++i) {
            obj.h(i) = nd(rng);
            obj.nu(i) = nd(rng);
            beta(i) = nd(rng);
        }
        double ref = 0.0;
        for (Index i = 0; i < 9; ++i) ref += 0.5 * obj.h(i) * (beta(i) - obj.nu(i)) * (beta(i) - obj.nu(i));
        EXPECT_NEAR(objective_value(obj, beta), ref, 1e-12 * (1.0 + std::abs(ref)));
    }
}

TEST(ModelCore, CompileObjectiveAnchorsKeptCoefficients)
{
    Vector beta0(4);
    beta0 << 1.0, -2.0, 0.0, 3.0;
    const auto t = AttackTarget::from_sets(4, {0}, {2}, 1.0, -1.0, 5.0);
    const auto obj = compile_objective(t, beta0);
    EXPECT_DOUBLE_EQ(obj.h(0), 1.0);
    EXPECT_DOUBLE_EQ(obj.h(2), -1.0);
    EXPECT_DOUBLE_EQ(obj.h(1), 5.0);
    EXPECT_DOUBLE_EQ(obj.nu(0), 0.0);
    EXPECT_DOUBLE_EQ(obj.nu(1), -2.0);
    EXPECT_DOUBLE_EQ(obj.nu(3), 3.0);
}

TEST(ModelCore, CompileObjectiveRejectsOverlapsAndGaps)
{
    const Vector beta0 = Vector::Ones(3);
    AttackTarget overlap = AttackTarget::from_sets(3, {0}, {1});
    overlap.promote.push_back(0);
    overlap.e.push_back(-1.0);
    EXPECT_THROW(compile_objective(overlap, beta0), PartitionError);

    AttackTarget gap = AttackTarget::from_sets(3, {0}, {1});
    gap.keep.clear();
    gap.mu.clear();
    EXPECT_THROW(compile_objective(gap, beta0), PartitionError);

    AttackTarget bad_sign = AttackTarget::from_sets(3, {0}, {1});
    bad_sign.e[0] = 1.0;
    EXPECT_THROW(compile_objective(bad_sign, beta0), ValueError);
}

TEST(ModelCore, PromoteTermDecreasesWithMagnitude)
{
    const auto t = AttackTarget::from_sets(3, {0}, {1});
    const auto obj = compile_objective(t, Vector::Zero(3));
    Vector a = Vector::Zero(3), b = Vector::Zero(3);
    a(1) = 0.5;
    b(1) = 1.0;
    EXPECT_GT(objective_value(obj, a), objective_value(obj, b));
    a(0) = 0.5;
    b = a;
    b(0) = 1.0;
    EXPECT_LT(objective_value(obj, a), objective_value(obj, b));
}

// ---------------------------------------------------------------------------
// Interior-point solvers
// ---------------------------------------------------------------------------

TEST(Solvers, OrthonormalDesignSoftThresholds)
{
    Vector y(2);
    y << 3.0, 0.5;
    const Dataset d(y, Matrix::Identity(2, 2));
    const auto s = solve_lasso(d, 2.0);
    EXPECT_NEAR(s.beta(0), 2.0, 1e-4);
    EXPECT_NEAR(s.beta(1), 0.0, 1e-4);
}

TEST(Solvers, ZeroSolutionAboveThreshold)
{
    const Dataset d = instance(3);
    const double lam = 2.0 * (d.X().transpose() * d.y()).lpNorm<Eigen::Infinity>();
    const auto s = solve_lasso(d, 1.01 * lam);
    EXPECT_LT(s.beta.lpNorm<Eigen::Infinity>(), 1e-6);
    // Just below the threshold one coefficient is active for the oracle too.
    const Vector cd = oracle::lasso_cd(d.X(), d.y(), 0.9 * lam);
    EXPECT_GT(cd.lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(Solvers, LassoMatchesCoordinateDescent)
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        for (double lam : {0.5, 2.0, 8.0}) {
            const Dataset d = instance(seed);
            const auto s = solve_lasso(d, lam);
            const Vector ref = oracle::lasso_cd(d.X(), d.y(), lam);
            EXPECT_LE((s.beta - ref).lpNorm<Eigen::Infinity>(), 1e-4) << "seed " << seed << " lambda " << lam;
            const auto model = ModelSpec::lasso(lam);
            EXPECT_LE(rel_gap(model.objective(d, s.beta), model.objective(d, ref)), 1e-6);
        }
    }
}

TEST(Solvers, GroupMatchesBlockDescent)
{
    const auto g = GroupPartition::uniform(6, 5);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Dataset d = instance(seed);
        const auto model = ModelSpec::group(2.0, g);
        const auto s = solve(d, model);
        const Vector ref = oracle::group_lasso_bcd(d.X(), d.y(), 2.0, g);
        EXPECT_LE((s.beta - ref).lpNorm<Eigen::Infinity>(), 1e-4) << "seed " << seed;
    }
}

TEST(Solvers, SparseGroupMatchesProximalOracle)
{
    const auto g = GroupPartition::uniform(6, 5);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Dataset d = instance(seed);
        const auto s = solve(d, ModelSpec::sparse_group(1.0, 2.0, g));
        const Vector ref = oracle::sparse_group_bcd(d.X(), d.y(), 1.0, 2.0, g);
        EXPECT_LE((s.beta - ref).lpNorm<Eigen::Infinity>(), 1e-3) << "seed " << seed;
    }
}

TEST(Solvers, UnitGroupsReduceToLasso)
{
    const Dataset d = instance(11);
    const auto a = solve_lasso(d, 2.0);
    const auto b = solve(d, ModelSpec::group(2.0, GroupPartition::singletons(d.m())));
    EXPECT_LE((a.beta - b.beta).lpNorm<Eigen::Infinity>(), 1e-4);
}

TEST(Solvers, SparseGroupLimitsReduceToParents)
{
    const Dataset d = instance(12);
    const auto g = GroupPartition::uniform(6, 5);
    const auto lasso = solve_lasso(d, 2.0);
    const auto group = solve(d, ModelSpec::group(2.0, g));
    const auto lim_lasso = solve(d, sparse_group_with_floor(d, 0.0, 2.0, g));
    const auto lim_group = solve(d, sparse_group_with_floor(d, 2.0, 0.0, g));
    EXPECT_LE((lim_lasso.beta - lasso.beta).lpNorm<Eigen::Infinity>(), 1e-3);
    EXPECT_LE((lim_group.beta - group.beta).lpNorm<Eigen::Infinity>(), 1e-3);
}

TEST(Solvers, KktResidualWithinTolerance)
{
    const Dataset d = instance(4);
    const auto g = GroupPartition::uniform(6, 5);
    for (const auto& model : {ModelSpec::lasso(2.0), ModelSpec::group(2.0, g), ModelSpec::sparse_group(1.0, 1.0, g)}) {
        const auto s = solve(d, model);
        EXPECT_LE(kkt_residual(model, d, s), kkt_tolerance(d)) << model.name();
        EXPECT_TRUE(std::isfinite(s.kkt_norm));
    }
}

TEST(Solvers, KktResidualGrowsWhenPerturbed)
{
    const Dataset d = instance(5);
    const auto model = ModelSpec::lasso(2.0);
    auto s = solve(d, model);
    const double base = kkt_residual(model, d, s);
    Index i = 0;
    s.beta.cwiseAbs().maxCoeff(&i);
    // Keep the box interior: move beta and both slacks consistently.
    s.beta(i) += 0.1;
    s.slack_lower(i) -= 0.1;
    s.slack_upper(i) += 0.1;
    if (s.slack_lower(i) <= 0.0) {
        s.slack_lower(i) += 0.2;
        s.slack_upper(i) += 0.2;
        (*s.u)(i) += 0.2;
    }
    EXPECT_GT(kkt_residual(model, d, s), base);
}

TEST(Solvers, KktResidualMatchesHandEvaluation)
{
    // n = m = 1: g_beta = 2 x (x b - y) + 2 b / (t (u^2 - b^2)),
    //            g_u    = lambda - 2 u / (t (u^2 - b^2)).
    Vector y(1), beta(1), u(1);
    y << 1.5;
    Matrix X(1, 1);
    X << 2.0;
    beta << 0.3;
    u << 0.8;
    const double t = 7.0, lam = 0.5;
    SolverSolution s;
    s.beta = beta;
    s.u = u;
    s.t_final = t;
    s.slack_lower = u - beta;
    s.slack_upper = u + beta;
    const Dataset d(y, X);
    const double del = 0.8 * 0.8 - 0.3 * 0.3;
    const double gb = 2.0 * 2.0 * (2.0 * 0.3 - 1.5) + 2.0 * 0.3 / (t * del);
    const double gu = lam - 2.0 * 0.8 / (t * del);
    EXPECT_NEAR(kkt_residual(ModelSpec::lasso(lam), d, s), std::hypot(gb, gu), 1e-12);
}

TEST(Solvers, BoundaryIterateIsRejected)
{
    Vector y(1), beta(1), u(1);
    y << 1.0;
    beta << 0.5;
    u << 0.5;
    SolverSolution s;
    s.beta = beta;
    s.u = u;
    s.t_final = 1.0;
    s.slack_lower = u - beta;
    s.slack_upper = u + beta;
    EXPECT_THROW(kkt_residual(ModelSpec::lasso(1.0), Dataset(y, Matrix::Ones(1, 1)), s), InteriorError);
}

TEST(Solvers, CentralPathObjectiveNonIncreasing)
{
    const Dataset d = instance(6);
    const auto g = GroupPartition::uniform(6, 5);
    for (const auto& model : {ModelSpec::lasso(2.0), ModelSpec::group(2.0, g), ModelSpec::sparse_group(1.0, 1.0, g)}) {
        const auto s = solve(d, model);
        ASSERT_GE(s.path.size(), 2u);
        for (std::size_t k = 1; k < s.path.size(); ++k)
            EXPECT_LE(s.path[k].objective, s.path[k - 1].objective + 1e-8) << model.name() << " step " << k;
    }
}

TEST(Solvers, GapBoundMeetsTarget)
{
    const Dataset d = instance(7);
    const auto model = ModelSpec::lasso(2.0);
    const auto s = solve(d, model);
    const double constraints = 2.0 * static_cast<double>(d.m());
    EXPECT_LE(constraints / s.t_final, 1e-6 * (1.0 + model.objective(d, s.beta)));
}

TEST(Solvers, DeterministicForFixedInput)
{
    const Dataset d = instance(8);
    const auto a = solve_lasso(d, 2.0);
    const auto b = solve_lasso(d, 2.0);
    EXPECT_EQ(a.beta, b.beta);
    EXPECT_EQ(a.newton_iters, b.newton_iters);
}

TEST(Solvers, NonFiniteDataRejected)
{
    Dataset d = instance(9);
    Vector y = d.y();
    y(0) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(solve_lasso(d.with_y(y), 2.0), Error);
}

TEST(Solvers, BarrierConfigValidated)
{
    BarrierConfig c;
    c.t_mult = 1.0;
    EXPECT_THROW(solve_lasso(instance(1), 1.0, c), ValueError);
}
