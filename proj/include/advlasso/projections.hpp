#pragma once

// Euclidean projections onto l1, l2 and l-infinity balls. Matrices are
// projected through their column-major vectorization.

#include "advlasso/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace advlasso {

namespace detail {

inline void check_radius(double eta)
{
    if (!(eta >= 0.0) || !std::isfinite(eta))
        throw ValueError("projection radius must be finite and >= 0");
}

/// Threshold for a soft-threshold projection once the active set is known.
/// The sum runs over the active entries in index order so that any method
/// that finds the same active set produces the same bits.
inline double l1_threshold(const std::vector<double>& a, double cut, double eta)
{
    double s = 0.0;
    Index rho = 0;
    for (double v : a)
        if (v >= cut) {
            s += v;
            ++rho;
        }
    return (s - eta) / static_cast<double>(rho);
}

inline Vector shrink(const Vector& x, double theta)
{
    Vector z(x.size());
    for (Index i = 0; i < x.size(); ++i) {
        const double m = std::max(std::abs(x(i)) - theta, 0.0);
        z(i) = std::copysign(m, x(i));
    }
    return z;
}

}  // namespace detail

/// argmin_{||z||_1 <= eta} ||z - x||_2 via pivot search for the
/// soft-threshold level (expected linear time).
inline Vector project_l1(const Vector& x, double eta)
{
    detail::check_radius(eta);
    if (x.lpNorm<1>() <= eta) return x;
    if (eta == 0.0) return Vector::Zero(x.size());

    std::vector<double> a(static_cast<std::size_t>(x.size()));
    for (Index i = 0; i < x.size(); ++i) a[static_cast<std::size_t>(i)] = std::abs(x(i));

    // An entry v is active iff sum_j max(a_j - v, 0) < eta. Every value in
    // `work` lies below all accepted values (sum s, count rho), so for a
    // pivot p that sum is s + (sum of work values >= p) - (count) * p.
    std::vector<double> work = a, next;
    double s = 0.0, cut = 0.0;
    Index rho = 0;
    while (!work.empty()) {
        const double pivot = work[work.size() / 2];
        double gs = 0.0;
        Index gn = 0;
        for (double v : work)
            if (v >= pivot) {
                gs += v;
                ++gn;
            }
        next.clear();
        if ((s + gs) - static_cast<double>(rho + gn) * pivot < eta) {
            s += gs;
            rho += gn;
            cut = pivot;
            for (double v : work)
                if (v < pivot) next.push_back(v);
        } else {
            for (double v : work)
                if (v > pivot) next.push_back(v);
        }
        work.swap(next);
    }
    return detail::shrink(x, detail::l1_threshold(a, cut, eta));
}

/// Sort-based l1 projection: the largest rho with
/// sum_{j <= rho} a_(j) - rho a_(rho) < eta fixes the threshold.
inline Vector project_l1_sort(const Vector& x, double eta)
{
    detail::check_radius(eta);
    if (x.lpNorm<1>() <= eta) return x;
    if (eta == 0.0) return Vector::Zero(x.size());

    std::vector<double> a(static_cast<std::size_t>(x.size()));
    for (Index i = 0; i < x.size(); ++i) a[static_cast<std::size_t>(i)] = std::abs(x(i));
    std::vector<double> sorted = a;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());

    double cum = 0.0, cut = sorted.front();
    for (std::size_t j = 0; j < sorted.size(); ++j) {
        cum += sorted[j];
        if (cum - static_cast<double>(j + 1) * sorted[j] < eta) cut = sorted[j];
        else break;
    }
    return detail::shrink(x, detail::l1_threshold(a, cut, eta));
}

/// x / max(1, ||x||_2 / eta).
inline Vector project_l2(const Vector& x, double eta)
{
    detail::check_radius(eta);
    const double nx = x.norm();
    if (nx <= eta) return x;
    if (eta == 0.0) return Vector::Zero(x.size());
    return x * (eta / nx);
}

/// Elementwise clamp to [-eta, eta].
inline Vector project_linf(const Vector& x, double eta)
{
    detail::check_radius(eta);
    return x.cwiseMax(-eta).cwiseMin(eta);
}

inline Vector project(NormKind p, const Vector& x, double eta)
{
    switch (p) {
    case NormKind::l1: return project_l1(x, eta);
    case NormKind::l2: return project_l2(x, eta);
    case NormKind::linf: return project_linf(x, eta);
    }
    throw ValueError("unknown norm");
}

/// center + project_p(x - center, eta).
inline Vector project_ball(const Vector& center, NormKind p, double eta, const Vector& x)
{
    require_dims(center.size() == x.size(), "projection center and point");
    return center + project(p, x - center, eta);
}

/// Matrix version: the ball is taken over vec(X).
inline Matrix project_ball(const Matrix& center, NormKind p, double eta, const Matrix& x)
{
    require_dims(center.rows() == x.rows() && center.cols() == x.cols(),
                 "projection center and point");
    const Matrix diff = x - center;
    const Vector v = Eigen::Map<const Vector>(diff.data(), diff.size());
    const Vector pv = project(p, v, eta);
    return center + Eigen::Map<const Matrix>(pv.data(), x.rows(), x.cols());
}

}  // namespace advlasso
