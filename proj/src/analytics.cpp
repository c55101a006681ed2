#include "ringivm/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace rivm {

std::optional<std::size_t> FeatureIndex::find(const Feature& f) const {
    auto it = std::find(features.begin(), features.end(), f);
    if (it == features.end()) return std::nullopt;
    return static_cast<std::size_t>(it - features.begin());
}

std::string FeatureIndex::label(std::size_t i, const Catalog& catalog) const {
    const auto& f = features.at(i);
    switch (f.kind) {
        case Feature::Kind::Intercept:
            return "(intercept)";
        case Feature::Kind::Continuous:
            return catalog.name(f.attr);
        case Feature::Kind::Category:
            return catalog.name(f.attr) + "=" + format_value(f.category, catalog.strings());
    }
    return {};
}

namespace {

double at_unit(double v) { return v; }
double at_unit(const RelationValue& r) { return r.at({}); }

/// Reads c, s and Q cells of a root triple by feature.
template <class E>
class CellReader {
public:
    CellReader(const DegreeMTriple<E>& root, const DegreeMLayout& layout) : root_(root), layout_(layout) {}

    double count() const { return at_unit(root_.c); }

    double linear(std::size_t i, const Feature& f) const {
        if constexpr (std::is_same_v<E, double>) {
            return root_.s[i];
        } else {
            return f.kind == Feature::Kind::Category ? root_.s[i].at({f.category}) : root_.s[i].at({});
        }
    }

    double quadratic(std::size_t i, const Feature& fi, std::size_t j, const Feature& fj) const {
        if constexpr (std::is_same_v<E, double>) {
            return root_.quad(i, j);
        } else {
            const bool ci = fi.kind == Feature::Kind::Category;
            const bool cj = fj.kind == Feature::Kind::Category;
            const RelationValue& q = root_.quad(i, j);
            if (i == j) {
                if (!ci) return q.at({});
                return fi.category == fj.category ? q.at({fi.category}) : 0.0;
            }
            KeyTuple key;
            if (ci && cj) {
                key = layout_.attrs()[i] < layout_.attrs()[j] ? KeyTuple{fi.category, fj.category}
                                                              : KeyTuple{fj.category, fi.category};
            } else if (ci) {
                key = {fi.category};
            } else if (cj) {
                key = {fj.category};
            }
            return q.at(key);
        }
    }

    /// Categories of attribute i present in the payload.
    std::vector<Value> categories(std::size_t i) const {
        std::vector<Value> out;
        if constexpr (!std::is_same_v<E, double>)
            for (const auto& [key, coeff] : root_.s[i].entries()) out.push_back(key.at(0));
        return out;
    }

private:
    const DegreeMTriple<E>& root_;
    const DegreeMLayout& layout_;
};

template <class E>
CovarSystem assemble(const DegreeMTriple<E>& root, const DegreeMLayout& layout, AttrId label,
                     std::span<const AttrId> attrs) {
    if (root.s.size() != layout.degree()) throw ValidationError("root payload does not match the ring layout");
    auto label_idx = layout.index_of(label);
    if (!label_idx) throw ValidationError("label is not tracked by the ring");
    if (layout.kind(*label_idx) != AttrKind::Continuous) throw ValidationError("label must be continuous");

    CellReader<E> cells(root, layout);
    CovarSystem sys;
    sys.n = cells.count();
    if (!(sys.n > 0)) throw ValidationError("no data");
    sys.label = label;

    // Feature list with the layout position of each feature's attribute.
    std::vector<std::size_t> pos{0};
    sys.index.features.push_back({});
    for (auto a : attrs) {
        auto idx = layout.index_of(a);
        if (!idx) throw ValidationError("feature " + std::to_string(a) + " is not tracked by the ring");
        if (a == label) throw ValidationError("the label cannot be a feature");
        if (layout.kind(*idx) == AttrKind::Continuous) {
            sys.index.features.push_back({Feature::Kind::Continuous, a, {}});
            pos.push_back(*idx);
        } else {
            for (auto& v : cells.categories(*idx)) {
                sys.index.features.push_back({Feature::Kind::Category, a, std::move(v)});
                pos.push_back(*idx);
            }
        }
    }

    const std::size_t d = sys.index.size();
    const Feature y{Feature::Kind::Continuous, label, {}};
    sys.xtx = SquareMatrix(d);
    sys.xty.assign(d, 0.0);
    const auto& fs = sys.index.features;
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            double v;
            if (i == 0 && j == 0)
                v = sys.n;
            else if (i == 0)
                v = cells.linear(pos[j], fs[j]);
            else
                v = cells.quadratic(pos[i], fs[i], pos[j], fs[j]);
            sys.xtx(i, j) = sys.xtx(j, i) = v;
        }
        sys.xty[i] = i == 0 ? cells.linear(*label_idx, y) : cells.quadratic(pos[i], fs[i], *label_idx, y);
    }
    sys.yty = cells.quadratic(*label_idx, y, *label_idx, y);
    return sys;
}

double norm(std::span<const double> v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

CovarSystem assemble_covar(const ScalarTriple& root, const DegreeMLayout& layout, AttrId label,
                           std::span<const AttrId> features) {
    return assemble(root, layout, label, features);
}

CovarSystem assemble_covar(const RelationalTriple& root, const DegreeMLayout& layout, AttrId label,
                           std::span<const AttrId> features) {
    return assemble(root, layout, label, features);
}

double ridge_objective(const CovarSystem& sys, std::span<const double> theta, double lambda) {
    const std::size_t d = sys.index.size();
    double quad = 0, lin = 0, penalty = 0;
    for (std::size_t i = 0; i < d; ++i) {
        double row = 0;
        for (std::size_t j = 0; j < d; ++j) row += sys.xtx(i, j) * theta[j];
        quad += theta[i] * row;
        lin += theta[i] * sys.xty[i];
        if (i > 0) penalty += theta[i] * theta[i];
    }
    return (quad - 2 * lin + sys.yty) / (2 * sys.n) + lambda / 2 * penalty;
}

std::vector<double> ridge_gradient(const CovarSystem& sys, std::span<const double> theta, double lambda) {
    const std::size_t d = sys.index.size();
    std::vector<double> g(d);
    for (std::size_t i = 0; i < d; ++i) {
        double row = 0;
        for (std::size_t j = 0; j < d; ++j) row += sys.xtx(i, j) * theta[j];
        g[i] = (row - sys.xty[i]) / sys.n + (i > 0 ? lambda * theta[i] : 0.0);
    }
    return g;
}

double default_tolerance(const CovarSystem& sys) {
    std::vector<double> b(sys.xty);
    for (auto& x : b) x /= sys.n;
    return 1e-6 * (1 + norm(b));
}

double gershgorin_bound(const CovarSystem& sys, double lambda) {
    double best = 0;
    for (std::size_t i = 0; i < sys.xtx.n; ++i) {
        double row = 0;
        for (std::size_t j = 0; j < sys.xtx.n; ++j) row += std::abs(sys.xtx(i, j) / sys.n + (i == j ? lambda : 0.0));
        best = std::max(best, row);
    }
    return best;
}

Model train_ridge(const CovarSystem& sys, double lambda, std::span<const double> theta0, const TrainOptions& options) {
    const std::size_t d = sys.index.size();
    if (!(sys.n > 0)) throw ValidationError("no data");
    if (lambda < 0) throw ValidationError("lambda must be non-negative");
    if (theta0.size() != d) throw ValidationError("initial parameters do not match the feature count");

    // Normalized system G theta - b, with the penalty folded into G.
    SquareMatrix g(d);
    std::vector<double> b(d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) g(i, j) = sys.xtx(i, j) / sys.n;
        if (i > 0) g(i, i) += lambda;
        b[i] = sys.xty[i] / sys.n;
    }
    const double bound = gershgorin_bound(sys, lambda);
    const double step = options.step ? *options.step : (bound > 0 ? 1 / bound : 1.0);
    const double tol = options.tol ? *options.tol : default_tolerance(sys);

    Model m;
    m.index = sys.index;
    m.lambda = lambda;
    m.theta.assign(theta0.begin(), theta0.end());
    std::vector<double> grad(d);
    auto gradient = [&] {
        for (std::size_t i = 0; i < d; ++i) {
            double row = -b[i];
            for (std::size_t j = 0; j < d; ++j) row += g(i, j) * m.theta[j];
            grad[i] = row;
        }
        return norm(grad);
    };

    double gnorm = gradient();
    const double initial = gnorm;
    while (gnorm > tol && m.iterations < options.max_iters) {
        for (std::size_t i = 0; i < d; ++i) m.theta[i] -= step * grad[i];
        ++m.iterations;
        gnorm = gradient();
        if (!std::isfinite(gnorm) || gnorm > 10 * initial)
            throw DivergenceError("gradient descent diverged after " + std::to_string(m.iterations) +
                                  " iterations; use a smaller step");
    }
    m.gradient_norm = gnorm;
    m.converged = gnorm <= tol;
    return m;
}

std::vector<double> warm_start(const Model* previous, const FeatureIndex& index) {
    std::vector<double> theta(index.size(), 0.0);
    if (!previous) return theta;
    for (std::size_t i = 0; i < index.size(); ++i)
        if (auto p = previous->index.find(index.features[i])) theta[i] = previous->theta[*p];
    return theta;
}

bool is_positive_semidefinite(const SquareMatrix& m, double ridge_scale) {
    const std::size_t n = m.n;
    double trace = 0;
    for (std::size_t i = 0; i < n; ++i) trace += m(i, i);
    const double ridge = ridge_scale * std::max(std::abs(trace), 1e-300);
    SquareMatrix l(n);
    for (std::size_t j = 0; j < n; ++j) {
        double diag = m(j, j) + ridge;
        for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
        if (!(diag > 0)) return false;
        l(j, j) = std::sqrt(diag);
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = m(i, j);
            for (std::size_t k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
            l(i, j) = v / l(j, j);
        }
    }
    return true;
}

namespace {

double entry_sum(const RelationValue& r) {
    double s = 0;
    for (const auto& [k, v] : r.entries()) s += v;
    return s;
}

void check_total(double c0, double total, const char* what) {
    if (std::abs(total - c0) > 1e-9 * c0)
        throw DataIntegrityError(std::string(what) + " counts sum to " + std::to_string(total) + ", expected " +
                                 std::to_string(c0));
}

double clamp_information(double v) {
    if (v < 0 && v >= -1e-12) return 0.0;
    if (v < 0) throw DataIntegrityError("negative mutual information " + std::to_string(v));
    return v;
}

}  // namespace

double entropy_from_counts(double c0, const RelationValue& cx) {
    if (!(c0 > 0)) throw ValidationError("no data");
    check_total(c0, entry_sum(cx), "marginal");
    double h = 0;
    for (const auto& [k, v] : cx.entries()) {
        if (v < 0) throw DataIntegrityError("negative count");
        h -= v / c0 * std::log(v / c0);
    }
    return clamp_information(h);
}

double mi_from_counts(double c0, const RelationValue& cx, const RelationValue& cy, const RelationValue& cxy) {
    if (!(c0 > 0)) throw ValidationError("no data");
    if (cx.schema().size() != 1 || cy.schema().size() != 1)
        throw DataIntegrityError("marginal counts must be keyed by one attribute");
    if (cx.schema() == cy.schema()) return entropy_from_counts(c0, cx);
    check_total(c0, entry_sum(cx), "X marginal");
    check_total(c0, entry_sum(cy), "Y marginal");
    check_total(c0, entry_sum(cxy), "joint");

    const auto& schema = cxy.schema();
    if (schema.size() != 2) throw DataIntegrityError("joint counts must be keyed by two attributes");
    const std::size_t px = schema[0] == cx.schema()[0] ? 0 : 1;
    if (schema[px] != cx.schema()[0] || schema[1 - px] != cy.schema()[0])
        throw DataIntegrityError("joint counts are keyed by other attributes");

    std::map<Value, double> mx, my;
    double info = 0;
    for (const auto& [key, v] : cxy.entries()) {
        const Value& x = key[px];
        const Value& y = key[1 - px];
        mx[x] += v;
        my[y] += v;
        if (v == 0) continue;
        const double fx = cx.at({x}), fy = cy.at({y});
        if (!(fx > 0) || !(fy > 0) || v < 0) throw DataIntegrityError("joint count without positive marginal");
        info += v / c0 * std::log(c0 * v / (fx * fy));
    }
    for (const auto& [k, v] : cx.entries())
        if (std::abs(mx[k[0]] - v) > 1e-9 * c0) throw DataIntegrityError("X marginal disagrees with joint counts");
    for (const auto& [k, v] : cy.entries())
        if (std::abs(my[k[0]] - v) > 1e-9 * c0) throw DataIntegrityError("Y marginal disagrees with joint counts");
    return clamp_information(info);
}

MIMatrix mi_matrix(const RelationalTriple& root, const DegreeMLayout& layout) {
    const std::size_t m = layout.degree();
    if (root.s.size() != m) throw ValidationError("root payload does not match the ring layout");
    for (std::size_t i = 0; i < m; ++i)
        if (layout.kind(i) != AttrKind::Categorical)
            throw ValidationError("mutual information needs categorical attributes");
    MIMatrix out;
    out.attrs = layout.attrs();
    out.values = SquareMatrix(m);
    const double c0 = root.c.at({});
    if (!(c0 > 0)) throw ValidationError("no data");
    for (std::size_t i = 0; i < m; ++i) {
        out.values(i, i) = entropy_from_counts(c0, root.s[i]);
        for (std::size_t j = i + 1; j < m; ++j)
            out.values(i, j) = out.values(j, i) = mi_from_counts(c0, root.s[i], root.s[j], root.quad(i, j));
    }
    return out;
}

std::int64_t BinSpec::bin(double x) const {
    if (!(max > min) || k <= 1) return 0;
    const double b = std::floor(k * (x - min) / (max - min));
    if (!(b >= 0)) return 0;
    return std::min<std::int64_t>(static_cast<std::int64_t>(std::min(b, 1e18)), k - 1);
}

BinSpec make_bins(std::span<const double> values, int k) {
    if (k < 1) throw ValidationError("bin count must be positive");
    BinSpec spec;
    spec.k = k;
    if (values.empty()) return spec;
    auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    spec.min = *lo;
    spec.max = *hi;
    return spec;
}

std::vector<RankedAttribute> select_features(const MIMatrix& mi, AttrId label, double threshold) {
    auto it = std::find(mi.attrs.begin(), mi.attrs.end(), label);
    if (it == mi.attrs.end()) throw ValidationError("label is not in the MI matrix");
    const auto l = static_cast<std::size_t>(it - mi.attrs.begin());
    std::vector<RankedAttribute> out;
    for (std::size_t i = 0; i < mi.attrs.size(); ++i)
        if (i != l) out.push_back({mi.attrs[i], mi.values(i, l), mi.values(i, l) > threshold});
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.mi > b.mi; });
    return out;
}

ChowLiuTree chow_liu(const SquareMatrix& mi) {
    struct Edge {
        double w;
        std::size_t i, j;
    };
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < mi.n; ++i)
        for (std::size_t j = i + 1; j < mi.n; ++j) edges.push_back({mi(i, j), i, j});
    std::stable_sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) { return a.w > b.w; });

    std::vector<std::size_t> parent(mi.n);
    std::iota(parent.begin(), parent.end(), 0);
    auto root = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    ChowLiuTree tree;
    for (const auto& e : edges) {
        const auto a = root(e.i), b = root(e.j);
        if (a == b) continue;
        parent[a] = b;
        tree.edges.push_back({e.i, e.j});
        tree.weight += e.w;
        if (tree.edges.size() + 1 == mi.n) break;
    }
    return tree;
}

}  // namespace rivm
