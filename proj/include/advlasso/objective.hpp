#pragma once

#include "advlasso/types.hpp"

namespace advlasso {

/// Compiles the adversary's intent into (H, nu). Kept coefficients are
/// anchored at their unattacked value beta0; suppressed and promoted ones
/// are measured from zero.
inline AttackObjective compile_objective(const AttackTarget& target, const Vector& beta0)
{
    const Index m = beta0.size();
    if (!beta0.allFinite()) throw ValueError("beta0 contains non-finite entries");
    if (target.s.size() != target.suppress.size() || target.e.size() != target.promote.size() ||
        target.mu.size() != target.keep.size())
        throw PartitionError("each index set needs exactly one weight per index");

    AttackObjective obj{Vector::Zero(m), Vector::Zero(m)};
    std::vector<char> seen(static_cast<std::size_t>(m), 0);
    auto claim = [&](Index i) {
        if (i < 0 || i >= m)
            throw PartitionError("index " + std::to_string(i + 1) + " outside 1.." + std::to_string(m));
        if (seen[static_cast<std::size_t>(i)])
            throw PartitionError("index " + std::to_string(i + 1) + " appears in more than one set");
        seen[static_cast<std::size_t>(i)] = 1;
    };

    for (std::size_t k = 0; k < target.suppress.size(); ++k) {
        const Index i = target.suppress[k];
        claim(i);
        if (!(target.s[k] > 0.0)) throw ValueError("suppress weights must be > 0");
        obj.h(i) = target.s[k];
    }
    for (std::size_t k = 0; k < target.promote.size(); ++k) {
        const Index i = target.promote[k];
        claim(i);
        if (!(target.e[k] < 0.0)) throw ValueError("promote weights must be < 0");
        obj.h(i) = target.e[k];
    }
    for (std::size_t k = 0; k < target.keep.size(); ++k) {
        const Index i = target.keep[k];
        claim(i);
        if (!(target.mu[k] > 0.0)) throw ValueError("keep weights must be > 0");
        obj.h(i) = target.mu[k];
        obj.nu(i) = beta0(i);
    }
    for (Index i = 0; i < m; ++i)
        if (!seen[static_cast<std::size_t>(i)])
            throw PartitionError("index " + std::to_string(i + 1) + " is not assigned to S, E or U");
    return obj;
}

/// 1/2 (beta - nu)^T H (beta - nu). Negative values are possible since the
/// promote weights are negative.
inline double objective_value(const AttackObjective& obj, const Vector& beta)
{
    require_dims(beta.size() == obj.h.size() && obj.nu.size() == obj.h.size(),
                 "objective and coefficient lengths differ");
    const Vector r = beta - obj.nu;
    return 0.5 * (obj.h.array() * r.array().square()).sum();
}

/// d f / d beta = H (beta - nu).
inline Vector objective_gradient(const AttackObjective& obj, const Vector& beta)
{
    require_dims(beta.size() == obj.h.size(), "objective and coefficient lengths differ");
    return obj.h.cwiseProduct(beta - obj.nu);
}

}  // namespace advlasso
