#include "advlasso/projections.hpp"
#include "oracles/projection_oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace advlasso;

namespace {

std::mt19937_64& rng()
{
    static std::mt19937_64 r(20240611);
    return r;
}

Vector random_vector(Index d, double scale = 2.0)
{
    std::normal_distribution<double> nd(0.0, scale);
    Vector v(d);
    for (Index i = 0; i < d; ++i) v(i) = nd(rng());
    return v;
}

const NormKind all_norms[] = {NormKind::l1, NormKind::l2, NormKind::linf};

}  // namespace

TEST(Projections, L1HandExamples)
{
    Vector x(2);
    x << 3.0, 0.0;
    const Vector z = project_l1(x, 1.0);
    EXPECT_DOUBLE_EQ(z(0), 1.0);
    EXPECT_DOUBLE_EQ(z(1), 0.0);
    Vector inside(3);
    inside << 0.2, -0.3, 0.1;
    EXPECT_EQ(project_l1(inside, 1.0), inside);
}

TEST(Projections, L2HandExamples)
{
    Vector x(2);
    x << 3.0, 4.0;
    const Vector z = project_l2(x, 1.0);
    EXPECT_NEAR(z(0), 0.6, 1e-15);
    EXPECT_NEAR(z(1), 0.8, 1e-15);
    Vector inside(2);
    inside << 0.3, 0.4;
    EXPECT_EQ(project_l2(inside, 1.0), inside);
}

TEST(Projections, LinfHandExamples)
{
    Vector x(2);
    x << 0.5, -3.0;
    const Vector z = project_linf(x, 1.0);
    EXPECT_EQ(z(0), 0.5);
    EXPECT_EQ(z(1), -1.0);
    EXPECT_EQ(project_linf(z, 1.0), z);
}

TEST(Projections, NegativeRadiusRejected)
{
    const Vector x = Vector::Ones(3);
    for (NormKind p : all_norms) EXPECT_THROW(project(p, x, -1.0), ValueError);
}

TEST(Projections, L1PivotMatchesSortExactly)
{
    std::uniform_int_distribution<int> dim(1, 40);
    std::uniform_int_distribution<int> small(-4, 4);
    std::uniform_real_distribution<double> radius(0.0, 10.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const Index d = dim(rng());
        Vector x = random_vector(d);
        if (trial % 3 == 0)  // integer entries force ties at the threshold
            for (Index i = 0; i < d; ++i) x(i) = small(rng());
        const double eta = radius(rng());
        const Vector a = project_l1(x, eta);
        const Vector b = project_l1_sort(x, eta);
        for (Index i = 0; i < d; ++i) ASSERT_EQ(a(i), b(i)) << "trial " << trial << " entry " << i;
    }
}

TEST(Projections, L1MatchesQpOracle)
{
    std::uniform_int_distribution<int> dim(1, 5);
    std::uniform_real_distribution<double> radius(0.05, 4.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const Index d = dim(rng());
        const Vector x = random_vector(d);
        const double eta = trial % 10 == 0 ? 1.0 : radius(rng());
        const Vector ref = oracle::l1_qp(x, eta);
        EXPECT_LE((project_l1(x, eta) - ref).cwiseAbs().maxCoeff(), 1e-6) << "trial " << trial;
    }
}

TEST(Projections, L2BeatsSampledFeasiblePoints)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const Vector x = random_vector(6);
        const double eta = 1.5;
        const double best = (project_l2(x, eta) - x).norm();
        for (int k = 0; k < 50; ++k) {
            Vector z = random_vector(6, 1.0);
            z *= eta * unit(rng()) / z.norm();
            EXPECT_LE(best, (z - x).norm() + 1e-12);
        }
    }
}

TEST(Projections, LinfMatchesScalarClamp)
{
    for (int trial = 0; trial < 200; ++trial) {
        const Vector x = random_vector(8);
        const double eta = 0.7;
        const Vector z = project_linf(x, eta);
        for (Index i = 0; i < x.size(); ++i) {
            double v[3] = {-eta, x(i), eta};
            std::sort(v, v + 3);
            EXPECT_EQ(z(i), v[1]);
        }
    }
}

TEST(Projections, FeasibleAndIdempotent)
{
    std::uniform_real_distribution<double> radius(0.0, 5.0);
    for (NormKind p : all_norms) {
        for (int trial = 0; trial < 300; ++trial) {
            const Vector x = random_vector(12);
            const double eta = radius(rng());
            const Vector z = project(p, x, eta);
            EXPECT_LE(norm_of(p, z), eta + 1e-12) << to_string(p);
            EXPECT_LE((project(p, z, eta) - z).cwiseAbs().maxCoeff(), 1e-12) << to_string(p);
        }
    }
}

TEST(Projections, NonExpansive)
{
    std::uniform_real_distribution<double> radius(0.1, 5.0);
    for (NormKind p : all_norms) {
        for (int trial = 0; trial < 300; ++trial) {
            const Vector a = random_vector(10), b = random_vector(10);
            const double eta = radius(rng());
            EXPECT_LE((project(p, a, eta) - project(p, b, eta)).norm(), (a - b).norm() + 1e-12)
                << to_string(p);
        }
    }
}

TEST(Projections, BallAroundCenter)
{
    const Vector c = random_vector(7);
    for (NormKind p : all_norms) {
        EXPECT_EQ(project_ball(c, p, 2.0, c), c);
        EXPECT_EQ(project_ball(c, p, 0.0, random_vector(7)), c);
        for (int trial = 0; trial < 50; ++trial) {
            const Vector x = random_vector(7);
            const Vector direct = project_ball(c, p, 1.3, x);
            const Vector translated = c + project(p, x - c, 1.3);
            EXPECT_LE((direct - translated).cwiseAbs().maxCoeff(), 1e-15);
        }
    }
    EXPECT_THROW(project_ball(c, NormKind::l2, 1.0, Vector::Zero(3)), DimensionError);
}

TEST(Projections, MatrixUsesVectorization)
{
    Matrix C = Matrix::Zero(3, 4), X(3, 4);
    for (Index j = 0; j < 4; ++j) X.col(j) = random_vector(3);
    for (NormKind p : all_norms) {
        const Matrix P = project_ball(C, p, 1.0, X);
        const Vector flat = project(p, Eigen::Map<const Vector>(X.data(), X.size()), 1.0);
        EXPECT_EQ(Eigen::Map<const Vector>(P.data(), P.size()), flat);
    }
}
