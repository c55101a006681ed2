#pragma once

// Shared test helpers: random ring values and tolerance-aware comparisons.

#include "ringivm/ring.hpp"

#include <random>
#include <sstream>

namespace rivm::testing {

inline bool close(double x, double y, double rel = 1e-9) {
    return std::abs(x - y) <= rel * std::max({1.0, std::abs(x), std::abs(y)});
}

inline bool approx_equal(std::int64_t a, std::int64_t b, double = 0) { return a == b; }
inline bool approx_equal(double a, double b, double rel = 1e-9) { return close(a, b, rel); }

inline bool approx_equal(const RelationValue& a, const RelationValue& b, double rel = 1e-9) {
    if (!a.empty() && !b.empty() && a.schema() != b.schema()) return false;
    for (const auto& [k, v] : a.entries())
        if (!close(v, b.at(k), rel)) return false;
    for (const auto& [k, v] : b.entries())
        if (!close(v, a.at(k), rel)) return false;
    return true;
}

template <class E>
bool approx_equal(const DegreeMTriple<E>& a, const DegreeMTriple<E>& b, double rel = 1e-9) {
    if (a.s.size() != b.s.size() || a.q.size() != b.q.size()) return false;
    if (!approx_equal(a.c, b.c, rel)) return false;
    for (std::size_t i = 0; i < a.s.size(); ++i)
        if (!approx_equal(a.s[i], b.s[i], rel)) return false;
    for (std::size_t i = 0; i < a.q.size(); ++i)
        if (!approx_equal(a.q[i], b.q[i], rel)) return false;
    return true;
}

inline bool approx_equal(const RingValue& a, const RingValue& b, double rel = 1e-9) {
    if (a.index() != b.index()) return false;
    return std::visit(
        [&](const auto& x) {
            using V = std::decay_t<decltype(x)>;
            return approx_equal(x, std::get<V>(b), rel);
        },
        a);
}

inline std::string show(std::int64_t v) { return std::to_string(v); }
inline std::string show(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}
inline std::string show(const RelationValue& r) {
    std::ostringstream os;
    os << "{";
    for (const auto& [k, v] : r.entries()) {
        os << "(";
        for (std::size_t i = 0; i < k.size(); ++i) {
            if (i) os << ",";
            std::visit([&](const auto& x) {
                if constexpr (std::is_same_v<std::decay_t<decltype(x)>, Category>) os << "#" << x.id;
                else os << x;
            }, k[i]);
        }
        os << ")->" << show(v) << " ";
    }
    os << "}";
    return os.str();
}
template <class E>
std::string show(const DegreeMTriple<E>& t) {
    std::ostringstream os;
    os << "c=" << show(t.c) << " s=[";
    for (const auto& e : t.s) os << show(e) << " ";
    os << "] q=[";
    for (const auto& e : t.q) os << show(e) << " ";
    os << "]";
    return os.str();
}

/// Random ring elements with small value domains so that joins match often.
class Generator {
public:
    explicit Generator(std::uint64_t seed) : rng_(seed) {}

    std::mt19937_64& rng() { return rng_; }

    int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }

    /// Multiples of 1/8 in [-4, 4]: sums and products of a few stay exact in binary.
    double small_real() { return uniform_int(-32, 32) / 8.0; }

    std::int64_t int_value() { return uniform_int(-6, 6); }

    RelationValue relation(const std::vector<AttrId>& schema, int domain = 3, int max_entries = 5) {
        std::vector<RelationValue::Entry> entries;
        const int n = uniform_int(0, max_entries);
        for (int i = 0; i < n; ++i) {
            KeyTuple key;
            for (std::size_t a = 0; a < schema.size(); ++a) key.push_back(std::int64_t{uniform_int(0, domain - 1)});
            entries.push_back({std::move(key), small_real()});
        }
        return RelationValue::from_entries(schema, std::move(entries));
    }

    /// Random subset of attributes 0..pool-1.
    std::vector<AttrId> schema(int pool = 4, int max_arity = 3) {
        std::vector<AttrId> s;
        for (AttrId a = 0; a < static_cast<AttrId>(pool); ++a)
            if (static_cast<int>(s.size()) < max_arity && coin(0.4)) s.push_back(a);
        return s;
    }

    ScalarTriple scalar_triple(std::size_t m) {
        ScalarTriple t;
        t.c = small_real();
        for (std::size_t i = 0; i < m; ++i) t.s.push_back(coin(0.8) ? small_real() : 0.0);
        for (std::size_t i = 0; i < m * (m + 1) / 2; ++i) t.q.push_back(coin(0.8) ? small_real() : 0.0);
        return t;
    }

    /// Entries follow the shape produced by lifting: s_i keyed by attribute i
    /// when categorical, Q_ij keyed by the categorical ones among i and j.
    RelationalTriple relational_triple(const DegreeMLayout& layout) {
        const std::size_t m = layout.degree();
        auto cat_schema = [&](std::size_t i) {
            return layout.kind(i) == AttrKind::Categorical ? std::vector<AttrId>{layout.attrs()[i]}
                                                           : std::vector<AttrId>{};
        };
        RelationalTriple t;
        t.c = relation({}, 1, 1);
        for (std::size_t i = 0; i < m; ++i) t.s.push_back(relation(cat_schema(i)));
        t.q.resize(m * (m + 1) / 2);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i; j < m; ++j) {
                auto schema = cat_schema(i);
                if (j != i)
                    for (auto a : cat_schema(j)) schema.push_back(a);
                t.quad(i, j) = relation(schema);
            }
        return t;
    }

private:
    std::mt19937_64 rng_;
};

}  // namespace rivm::testing
