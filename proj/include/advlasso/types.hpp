#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace advlasso {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : Error {
    using Error::Error;
};

struct PartitionError : Error {
    using Error::Error;
};

struct ValueError : Error {
    using Error::Error;
};

/// Raised when a barrier iterate touches (or leaves) the strict interior.
struct InteriorError : Error {
    using Error::Error;
};

inline void require_dims(bool ok, const std::string& what)
{
    if (!ok) throw DimensionError("dimension mismatch: " + what);
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

/// Response vector y (length n) and feature matrix X (n x m, row = sample).
class Dataset {
public:
    Dataset() = default;

    Dataset(Vector y, Matrix X) : y_(std::move(y)), X_(std::move(X))
    {
        if (y_.size() < 1 || X_.cols() < 1)
            throw DimensionError("dataset requires n >= 1 and m >= 1");
        require_dims(X_.rows() == y_.size(), "X rows must equal length of y");
        if (!y_.allFinite() || !X_.allFinite())
            throw ValueError("dataset contains non-finite entries");
    }

    const Vector& y() const noexcept { return y_; }
    const Matrix& X() const noexcept { return X_; }
    Index n() const noexcept { return X_.rows(); }
    Index m() const noexcept { return X_.cols(); }

    Dataset with_y(Vector y) const { return Dataset(std::move(y), X_); }
    Dataset with_X(Matrix X) const { return Dataset(y_, std::move(X)); }

private:
    Vector y_;
    Matrix X_;
};

// ---------------------------------------------------------------------------
// Group partition and model specification
// ---------------------------------------------------------------------------

/// Contiguous partition of the m coefficients into groups of size p_l.
class GroupPartition {
public:
    GroupPartition() = default;

    explicit GroupPartition(std::vector<Index> sizes) : sizes_(std::move(sizes))
    {
        if (sizes_.empty()) throw PartitionError("group partition is empty");
        offsets_.reserve(sizes_.size());
        Index off = 0;
        for (Index p : sizes_) {
            if (p < 1) throw PartitionError("group sizes must be >= 1");
            offsets_.push_back(off);
            off += p;
        }
        total_ = off;
    }

    static GroupPartition uniform(Index groups, Index size)
    {
        return GroupPartition(std::vector<Index>(static_cast<std::size_t>(groups), size));
    }

    static GroupPartition singletons(Index m) { return uniform(m, 1); }

    Index num_groups() const noexcept { return static_cast<Index>(sizes_.size()); }
    Index total() const noexcept { return total_; }
    Index size(Index l) const { return sizes_[static_cast<std::size_t>(l)]; }
    Index offset(Index l) const { return offsets_[static_cast<std::size_t>(l)]; }
    const std::vector<Index>& sizes() const noexcept { return sizes_; }

    /// Group index owning coefficient i.
    Index group_of(Index i) const
    {
        auto it = std::upper_bound(offsets_.begin(), offsets_.end(), i);
        return static_cast<Index>(it - offsets_.begin()) - 1;
    }

    bool operator==(const GroupPartition&) const = default;

private:
    std::vector<Index> sizes_;
    std::vector<Index> offsets_;
    Index total_ = 0;
};

struct LassoModel {
    double lambda;
};

struct GroupModel {
    double lambda;
    GroupPartition groups;
};

struct SparseGroupModel {
    double lambda1;  // group (l2) penalty
    double lambda2;  // elementwise (l1) penalty
    GroupPartition groups;
};

enum class ModelKind { lasso, group, sparse_group };

/// Which lower-level regularizer the learner uses. Effective per-group
/// weights lambda * sqrt(p_l) are derived on demand.
class ModelSpec {
public:
    ModelSpec(LassoModel m) : v_(m) { validate(); }
    ModelSpec(GroupModel m) : v_(std::move(m)) { validate(); }
    ModelSpec(SparseGroupModel m) : v_(std::move(m)) { validate(); }

    static ModelSpec lasso(double lambda) { return ModelSpec(LassoModel{lambda}); }
    static ModelSpec group(double lambda, GroupPartition g)
    {
        return ModelSpec(GroupModel{lambda, std::move(g)});
    }
    static ModelSpec sparse_group(double lambda1, double lambda2, GroupPartition g)
    {
        return ModelSpec(SparseGroupModel{lambda1, lambda2, std::move(g)});
    }

    ModelKind kind() const noexcept { return static_cast<ModelKind>(v_.index()); }

    const LassoModel* as_lasso() const noexcept { return std::get_if<LassoModel>(&v_); }
    const GroupModel* as_group() const noexcept { return std::get_if<GroupModel>(&v_); }
    const SparseGroupModel* as_sparse_group() const noexcept
    {
        return std::get_if<SparseGroupModel>(&v_);
    }

    /// Group partition for group variants; nullptr for plain lasso.
    const GroupPartition* groups() const noexcept
    {
        if (auto g = as_group()) return &g->groups;
        if (auto s = as_sparse_group()) return &s->groups;
        return nullptr;
    }

    /// Weight on ||beta_l||_2 in the penalty (lambda_l or lambda~_l).
    double group_weight(Index l) const
    {
        const GroupPartition* g = groups();
        if (!g) throw ValueError("lasso model has no groups");
        const double base = as_group() ? as_group()->lambda : as_sparse_group()->lambda1;
        return base * std::sqrt(static_cast<double>(g->size(l)));
    }

    /// Weight on ||beta||_1; zero for the pure group model.
    double l1_weight() const noexcept
    {
        if (auto l = as_lasso()) return l->lambda;
        if (auto s = as_sparse_group()) return s->lambda2;
        return 0.0;
    }

    /// Checks the model against a coefficient count.
    void check_dimension(Index m) const
    {
        if (const GroupPartition* g = groups(); g && g->total() != m)
            throw PartitionError("group sizes sum to " + std::to_string(g->total()) +
                                 " but the dataset has " + std::to_string(m) + " features");
    }

    /// Regularizer value at beta.
    double penalty(const Vector& beta) const
    {
        double pen = l1_weight() * beta.lpNorm<1>();
        if (const GroupPartition* g = groups()) {
            for (Index l = 0; l < g->num_groups(); ++l)
                pen += group_weight(l) * beta.segment(g->offset(l), g->size(l)).norm();
        }
        return pen;
    }

    /// ||y - X beta||^2 + penalty(beta).
    double objective(const Dataset& d, const Vector& beta) const
    {
        return (d.y() - d.X() * beta).squaredNorm() + penalty(beta);
    }

    std::string name() const
    {
        switch (kind()) {
        case ModelKind::lasso: return "lasso";
        case ModelKind::group: return "group";
        case ModelKind::sparse_group: return "sparse_group";
        }
        return "unknown";
    }

private:
    void validate() const
    {
        auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
        bool ok = std::visit(
            [&](const auto& m) {
                using T = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<T, LassoModel>) return positive(m.lambda);
                else if constexpr (std::is_same_v<T, GroupModel>) return positive(m.lambda);
                else return positive(m.lambda1) && positive(m.lambda2);
            },
            v_);
        if (!ok) throw ValueError("penalty parameters must be finite and > 0");
        if (auto g = groups(); g && g->num_groups() == 0)
            throw PartitionError("group model requires a non-empty partition");
    }

    std::variant<LassoModel, GroupModel, SparseGroupModel> v_;
};

// ---------------------------------------------------------------------------
// Attack target, objective and budget
// ---------------------------------------------------------------------------

/// Per-coefficient intent. Indices are 0-based here; configs and reports
/// use 1-based indices.
struct AttackTarget {
    std::vector<Index> suppress;  // S
    std::vector<double> s;        // > 0
    std::vector<Index> promote;   // E
    std::vector<double> e;        // < 0
    std::vector<Index> keep;      // U
    std::vector<double> mu;       // > 0

    static constexpr double default_s = 1.0;
    static constexpr double default_e = -1.0;
    static constexpr double default_mu = 5.0;

    /// Builds a target where every index not listed in S or E is kept,
    /// with uniform weights.
    static AttackTarget from_sets(Index m, std::vector<Index> suppress, std::vector<Index> promote,
                                  double s = default_s, double e = default_e,
                                  double mu = default_mu)
    {
        AttackTarget t;
        std::vector<char> used(static_cast<std::size_t>(m), 0);
        for (Index i : suppress) {
            if (i < 0 || i >= m) throw PartitionError("suppress index out of range");
            used[static_cast<std::size_t>(i)] = 1;
        }
        for (Index i : promote) {
            if (i < 0 || i >= m) throw PartitionError("promote index out of range");
            used[static_cast<std::size_t>(i)] = 1;
        }
        t.s.assign(suppress.size(), s);
        t.e.assign(promote.size(), e);
        t.suppress = std::move(suppress);
        t.promote = std::move(promote);
        for (Index i = 0; i < m; ++i) {
            if (!used[static_cast<std::size_t>(i)]) {
                t.keep.push_back(i);
                t.mu.push_back(mu);
            }
        }
        return t;
    }
};

/// f(beta) = 1/2 (beta - nu)^T H (beta - nu) with H = diag(h).
struct AttackObjective {
    Vector h;
    Vector nu;
};

enum class NormKind { l1, l2, linf };

inline std::string to_string(NormKind p)
{
    switch (p) {
    case NormKind::l1: return "l1";
    case NormKind::l2: return "l2";
    case NormKind::linf: return "linf";
    }
    return "?";
}

inline NormKind parse_norm(const std::string& s)
{
    if (s == "l1" || s == "1") return NormKind::l1;
    if (s == "l2" || s == "2") return NormKind::l2;
    if (s == "linf" || s == "inf") return NormKind::linf;
    throw ValueError("unknown norm '" + s + "' (expected l1, l2 or linf)");
}

inline double norm_of(NormKind p, const Eigen::Ref<const Vector>& v)
{
    switch (p) {
    case NormKind::l1: return v.lpNorm<1>();
    case NormKind::l2: return v.norm();
    case NormKind::linf: return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0;
    }
    return 0.0;
}

struct Budget {
    NormKind p = NormKind::l2;
    double eta_y = 0.0;
    double eta_x = 0.0;

    void validate() const
    {
        if (!(eta_y >= 0.0) || !(eta_x >= 0.0) || !std::isfinite(eta_y) || !std::isfinite(eta_x))
            throw ValueError("budget radii must be finite and non-negative");
    }
};

/// Entries of v whose magnitude exceeds tol.
inline std::vector<Index> support(const Vector& v, double tol)
{
    std::vector<Index> out;
    for (Index i = 0; i < v.size(); ++i)
        if (std::abs(v(i)) > tol) out.push_back(i);
    return out;
}

}  // namespace advlasso
