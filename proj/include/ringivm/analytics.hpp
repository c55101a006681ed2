#pragma once

// Models derived from the root payload of a degree-m ring: the COVAR system and
// ridge regression, pairwise mutual information, feature ranking and the
// Chow-Liu tree.

#include "ringivm/ring.hpp"

#include <optional>
#include <span>

namespace rivm {

class DivergenceError : public Error {
public:
    using Error::Error;
};

class DataIntegrityError : public Error {
public:
    using Error::Error;
};

/// Row-major square matrix.
struct SquareMatrix {
    std::size_t n = 0;
    std::vector<double> a;

    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t size) : n(size), a(size * size, 0.0) {}
    double& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }
    bool operator==(const SquareMatrix&) const = default;
};

struct Feature {
    enum class Kind { Intercept, Continuous, Category };
    Kind kind = Kind::Intercept;
    AttrId attr = 0;
    Value category{};  // Category features only

    bool operator==(const Feature&) const = default;
};

/// Intercept first, then the requested attributes in order; a categorical
/// attribute expands to one feature per category present in the payload,
/// in key order.
struct FeatureIndex {
    std::vector<Feature> features;

    std::size_t size() const noexcept { return features.size(); }
    std::optional<std::size_t> find(const Feature& f) const;
    std::string label(std::size_t i, const Catalog& catalog) const;
    bool operator==(const FeatureIndex&) const = default;
};

/// Sufficient statistics of least squares: X^T X, X^T y and y^T y over the
/// features, with n the number of (weighted) rows.
struct CovarSystem {
    double n = 0;
    AttrId label = 0;
    FeatureIndex index;
    SquareMatrix xtx;
    std::vector<double> xty;
    double yty = 0;
};

/// `features` are the regressors (excluding the label); every one of them and
/// the label must be tracked by the layout. Throws on an empty root.
CovarSystem assemble_covar(const ScalarTriple& root, const DegreeMLayout& layout, AttrId label,
                           std::span<const AttrId> features);
CovarSystem assemble_covar(const RelationalTriple& root, const DegreeMLayout& layout, AttrId label,
                           std::span<const AttrId> features);

struct Model {
    FeatureIndex index;
    std::vector<double> theta;
    double lambda = 0;
    std::size_t iterations = 0;
    double gradient_norm = 0;
    bool converged = false;
};

struct TrainOptions {
    std::optional<double> tol;   // default 1e-6 * (1 + |xty/n|)
    std::size_t max_iters = 10000;
    std::optional<double> step;  // default 1/L, L the Gershgorin bound of xtx/n + lambda*I
};

/// J(theta) = |X theta - y|^2 / 2n + lambda/2 |theta without intercept|^2
double ridge_objective(const CovarSystem& sys, std::span<const double> theta, double lambda);
std::vector<double> ridge_gradient(const CovarSystem& sys, std::span<const double> theta, double lambda);
double default_tolerance(const CovarSystem& sys);
double gershgorin_bound(const CovarSystem& sys, double lambda);

/// Batch gradient descent from `theta0` (size must match the system).
Model train_ridge(const CovarSystem& sys, double lambda, std::span<const double> theta0,
                  const TrainOptions& options = {});

/// Initial parameters for `index` taken from `previous` where features match.
std::vector<double> warm_start(const Model* previous, const FeatureIndex& index);

/// Cholesky of xtx with a small ridge succeeds.
bool is_positive_semidefinite(const SquareMatrix& m, double ridge_scale = 1e-8);

/// I(X;Y) in nats from C_0, C_X, C_Y and C_XY. Keys of `cxy` follow its sorted
/// attribute schema. Passing the same attribute twice yields the entropy H(X).
double mi_from_counts(double c0, const RelationValue& cx, const RelationValue& cy, const RelationValue& cxy);
double entropy_from_counts(double c0, const RelationValue& cx);

struct MIMatrix {
    std::vector<AttrId> attrs;
    SquareMatrix values;  // diagonal holds entropies
};

/// Requires every layout attribute to be categorical.
MIMatrix mi_matrix(const RelationalTriple& root, const DegreeMLayout& layout);

/// Equal-width bins over [min, max] of the initial data.
struct BinSpec {
    double min = 0;
    double max = 0;
    int k = 16;

    std::int64_t bin(double x) const;
};

BinSpec make_bins(std::span<const double> values, int k = 16);
inline std::int64_t bin_value(double x, const BinSpec& spec) { return spec.bin(x); }

struct RankedAttribute {
    AttrId attr = 0;
    double mi = 0;
    bool selected = false;
};

/// Attributes other than the label, by descending I(X, label); ties keep
/// matrix order. Selected iff I > threshold.
std::vector<RankedAttribute> select_features(const MIMatrix& mi, AttrId label, double threshold);

struct ChowLiuTree {
    std::vector<std::pair<std::size_t, std::size_t>> edges;  // indices into MIMatrix::attrs, i < j
    double weight = 0;
};

/// Maximum-weight spanning tree by Kruskal: weight descending, then (i, j).
ChowLiuTree chow_liu(const SquareMatrix& mi);

}  // namespace rivm
