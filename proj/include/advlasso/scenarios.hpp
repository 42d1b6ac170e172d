#pragma once

// Data generators for the synthetic regression, direction-of-arrival and
// grouped synthetic experiments, plus fit metrics.

#include "advlasso/types.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace advlasso {

using Rng = std::mt19937_64;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

namespace detail {

inline Matrix normal_matrix(Rng& rng, Index rows, Index cols)
{
    std::normal_distribution<double> nd(0.0, 1.0);
    Matrix A(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) A(i, j) = nd(rng);
    return A;
}

/// k distinct indices from 0..m-1, returned in increasing order.
inline std::vector<Index> choose_indices(Rng& rng, Index m, Index k)
{
    std::vector<Index> all(static_cast<std::size_t>(m));
    for (Index i = 0; i < m; ++i) all[static_cast<std::size_t>(i)] = i;
    for (Index i = 0; i < k; ++i) {
        std::uniform_int_distribution<Index> pick(i, m - 1);
        std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(pick(rng))]);
    }
    all.resize(static_cast<std::size_t>(k));
    std::sort(all.begin(), all.end());
    return all;
}

/// Stream for attack-target selection, independent of the data stream.
inline Rng target_rng(std::uint64_t seed)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      0x74617267u};
    return Rng(seq);
}

/// k entries of pool chosen uniformly, in pool order.
inline std::vector<Index> pick(Rng& rng, const std::vector<Index>& pool, Index k, const char* what)
{
    if (k > static_cast<Index>(pool.size()))
        throw ValueError(std::string("target: cannot pick ") + std::to_string(k) + " " + what +
                         " units from " + std::to_string(pool.size()) + " candidates");
    std::vector<Index> out;
    for (Index i : choose_indices(rng, static_cast<Index>(pool.size()), k))
        out.push_back(pool[static_cast<std::size_t>(i)]);
    return out;
}

}  // namespace detail

/// One suppressed coefficient drawn from the support of beta and one promoted
/// coefficient drawn from its complement, either side omitted when empty.
inline AttackTarget random_target(const Vector& beta, std::uint64_t seed, double support_tol = 1e-6)
{
    std::vector<Index> active, inactive;
    for (Index i = 0; i < beta.size(); ++i) (std::abs(beta(i)) > support_tol ? active : inactive).push_back(i);
    Rng rng = detail::target_rng(seed);
    std::vector<Index> sup, pro;
    if (!active.empty()) sup = detail::pick(rng, active, 1, "active");
    if (!inactive.empty()) pro = detail::pick(rng, inactive, 1, "inactive");
    return AttackTarget::from_sets(beta.size(), sup, pro);
}

struct SyntheticData {
    Dataset data;
    Vector v_true;
};

/// X i.i.d. N(0, 1); v with k_sparse N(0, 1) entries at random positions;
/// y = X v + n with n i.i.d. N(0, sigma^2).
inline SyntheticData gen_synthetic(Index n, Index m, Index k_sparse, double sigma, std::uint64_t seed)
{
    if (n < 1 || m < 1 || k_sparse < 0 || k_sparse > m)
        throw ValueError("gen_synthetic needs n, m >= 1 and 0 <= k_sparse <= m");
    if (!(sigma >= 0.0)) throw ValueError("noise level must be >= 0");
    Rng rng(seed);
    Matrix X = detail::normal_matrix(rng, n, m);
    Vector v = Vector::Zero(m);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (Index i : detail::choose_indices(rng, m, k_sparse)) v(i) = nd(rng);
    Vector y = X * v;
    if (sigma > 0.0)
        for (Index i = 0; i < n; ++i) y(i) += sigma * nd(rng);
    return {Dataset(std::move(y), std::move(X)), std::move(v)};
}

/// Uniform-linear-array scene on an M-point grid with K sources.
struct DoaScene {
    Index N = 0;
    Index M = 0;
    Index K = 0;
    std::vector<Index> sources;  // 0-based grid indices
    ComplexVector amplitudes;    // length K
    double sigma = 0.0;
    ComplexMatrix A;             // N x M steering matrix
    ComplexVector x;             // length M, nonzero at the sources
    ComplexVector y;             // N measurements

    /// Coefficient layout of the stacked real problem: grid point i maps to
    /// columns 2i (real part) and 2i + 1 (imaginary part).
    static Index real_col(Index i) { return 2 * i; }
    static Index imag_col(Index i) { return 2 * i + 1; }
    GroupPartition groups() const { return GroupPartition::uniform(M, 2); }

    /// |x_i| per grid point from a stacked coefficient vector.
    static Vector magnitudes(const Vector& beta)
    {
        Vector out(beta.size() / 2);
        for (Index i = 0; i < out.size(); ++i)
            out(i) = std::hypot(beta(real_col(i)), beta(imag_col(i)));
        return out;
    }
};

/// A_{n,m} = exp(j 2 pi n (m - 1) / M) for n = 1..N, m = 1..M.
inline ComplexMatrix steering_matrix(Index N, Index M)
{
    ComplexMatrix A(N, M);
    for (Index n = 1; n <= N; ++n)
        for (Index m = 1; m <= M; ++m)
            A(n - 1, m - 1) = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(n) *
                                                   static_cast<double>(m - 1) /
                                                   static_cast<double>(M));
    return A;
}

/// Real form of y = A x: [Re y; Im y] = [A^R, -A^I; A^I, A^R] [x^R; x^I],
/// with columns interleaved per grid point so that (x^R_i, x^I_i) form
/// contiguous size-2 groups.
inline Matrix stack_steering(const ComplexMatrix& A)
{
    const Index N = A.rows(), M = A.cols();
    Matrix S(2 * N, 2 * M);
    for (Index i = 0; i < M; ++i) {
        for (Index n = 0; n < N; ++n) {
            const double re = A(n, i).real(), im = A(n, i).imag();
            S(n, DoaScene::real_col(i)) = re;
            S(n, DoaScene::imag_col(i)) = -im;
            S(N + n, DoaScene::real_col(i)) = im;
            S(N + n, DoaScene::imag_col(i)) = re;
        }
    }
    return S;
}

inline Vector stack_response(const ComplexVector& y)
{
    Vector out(2 * y.size());
    out.head(y.size()) = y.real();
    out.tail(y.size()) = y.imag();
    return out;
}

struct DoaData {
    DoaScene scene;
    Dataset data;
};

namespace detail {

inline ComplexVector normal_amplitudes(Rng& rng, Index K)
{
    std::normal_distribution<double> nd(0.0, 1.0);
    ComplexVector amp(K);
    for (Index k = 0; k < K; ++k) {
        const double re = nd(rng);
        const double im = nd(rng);
        amp(k) = std::complex<double>(re, im);
    }
    return amp;
}

inline DoaData make_doa(Index N, Index M, std::vector<Index> sources, ComplexVector amplitudes,
                        double sigma, Rng& rng)
{
    const Index K = static_cast<Index>(sources.size());
    if (N < 1 || M < 1 || K > M) throw ValueError("build_doa needs N, M >= 1 and K <= M");
    require_dims(amplitudes.size() == K, "one amplitude per source");
    if (!(sigma >= 0.0)) throw ValueError("noise level must be >= 0");
    for (Index i : sources)
        if (i < 0 || i >= M) throw ValueError("source index outside the grid");
    std::vector<Index> sorted = sources;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw ValueError("source indices must be distinct");

    DoaScene s;
    s.N = N;
    s.M = M;
    s.K = K;
    s.sigma = sigma;
    s.sources = std::move(sources);
    s.amplitudes = std::move(amplitudes);
    s.A = steering_matrix(N, M);
    s.x = ComplexVector::Zero(M);
    for (Index k = 0; k < K; ++k) s.x(s.sources[static_cast<std::size_t>(k)]) = s.amplitudes(k);
    s.y = s.A * s.x;
    if (sigma > 0.0) {
        std::normal_distribution<double> nd(0.0, sigma);
        for (Index n = 0; n < N; ++n) {
            const double re = nd(rng);
            const double im = nd(rng);
            s.y(n) += std::complex<double>(re, im);
        }
    }
    Dataset d(stack_response(s.y), stack_steering(s.A));
    return {std::move(s), std::move(d)};
}

}  // namespace detail

/// K sources at distinct random grid points; amplitudes and noise are
/// complex with real and imaginary parts i.i.d. N(0, 1) and N(0, sigma^2).
inline DoaData build_doa(Index N, Index M, Index K, double sigma, std::uint64_t seed)
{
    if (N < 1 || M < 1 || K < 0 || K > M) throw ValueError("build_doa needs N, M >= 1 and K <= M");
    Rng rng(seed);
    auto sources = detail::choose_indices(rng, M, K);
    ComplexVector amp = detail::normal_amplitudes(rng, K);
    return detail::make_doa(N, M, std::move(sources), std::move(amp), sigma, rng);
}

/// Scene with explicit sources (0-based grid indices) and amplitudes.
inline DoaData build_doa(Index N, Index M, std::vector<Index> sources, ComplexVector amplitudes,
                         double sigma, std::uint64_t seed)
{
    Rng rng(seed);
    return detail::make_doa(N, M, std::move(sources), std::move(amplitudes), sigma, rng);
}

struct GroupedData {
    Dataset data;
    GroupPartition groups;
    Vector v_true;
};

/// L groups of size p; k_groups active groups, each keeping every entry with
/// probability within_sparsity (at least one per active group). Nonzeros are
/// N(0, 1); X and the noise as in gen_synthetic.
inline GroupedData gen_grouped_synthetic(Index n, Index L, Index p, Index k_groups,
                                         double within_sparsity, double sigma, std::uint64_t seed)
{
    if (n < 1 || L < 1 || p < 1 || k_groups < 0 || k_groups > L)
        throw ValueError("gen_grouped_synthetic needs n, L, p >= 1 and 0 <= k_groups <= L");
    if (!(within_sparsity > 0.0 && within_sparsity <= 1.0))
        throw ValueError("within_sparsity must lie in (0, 1]");
    if (!(sigma >= 0.0)) throw ValueError("noise level must be >= 0");
    Rng rng(seed);
    const Index m = L * p;
    Matrix X = detail::normal_matrix(rng, n, m);
    Vector v = Vector::Zero(m);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::bernoulli_distribution keep(within_sparsity);
    for (Index l : detail::choose_indices(rng, L, k_groups)) {
        std::vector<Index> on;
        for (Index j = 0; j < p; ++j)
            if (keep(rng)) on.push_back(j);
        if (on.empty()) on.push_back(std::uniform_int_distribution<Index>(0, p - 1)(rng));
        for (Index j : on) v(l * p + j) = nd(rng);
    }
    Vector y = X * v;
    if (sigma > 0.0)
        for (Index i = 0; i < n; ++i) y(i) += sigma * nd(rng);
    return {Dataset(std::move(y), std::move(X)), GroupPartition::uniform(L, p), std::move(v)};
}

struct FitMetrics {
    double r2;
    double rmse;
};

/// r^2 = 1 - SSE / SST (SST about the mean of y_true), rmse = sqrt(SSE / n).
inline FitMetrics metrics(const Vector& y_true, const Vector& y_pred)
{
    require_dims(y_true.size() == y_pred.size(), "metrics need equal lengths");
    if (y_true.size() < 2) throw ValueError("metrics need at least two samples");
    const double n = static_cast<double>(y_true.size());
    const double sse = (y_true - y_pred).squaredNorm();
    const double sst = (y_true.array() - y_true.mean()).square().sum();
    if (!(sst > 0.0)) throw ValueError("r^2 is undefined for a response with zero variance");
    return {1.0 - sse / sst, std::sqrt(sse / n)};
}

}  // namespace advlasso
