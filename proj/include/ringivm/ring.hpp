#pragma once

// Aggregation rings. Every payload in every relation and view is an element of
// one of four commutative rings:
//
//   IntRing              tuple multiplicities (Z)
//   RelRing              relations with real coefficients; + is union, * is natural join
//   ScalarCovarRing      degree-m triples (c, s, Q) over doubles
//   RelationalCovarRing  degree-m triples whose entries are RelRing values
//
// The two degree-m rings share one implementation of the triple formulas:
//
//   a + b = (c_a + c_b, s_a + s_b, Q_a + Q_b)
//   a * b = (c_a c_b, c_b s_a + c_a s_b, c_b Q_a + c_a Q_b + s_a s_b^T + s_b s_a^T)
//
// Q is symmetric and only its upper triangle is stored.

#include "ringivm/value.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <memory>
#include <span>

namespace rivm {

/// Magnitudes at or below this are zero.
inline constexpr double kZeroTolerance = 1e-12;
/// A sum is snapped to zero when it is this small relative to its larger operand.
inline constexpr double kCancellationTolerance = 1e-10;

/// Floating-point addition that snaps cancelled sums to exactly zero, so that
/// inserting and then deleting the same contribution evicts the key.
inline double cancel_add(double a, double b) noexcept {
    const double r = a + b;
    const double scale = std::max(std::abs(a), std::abs(b));
    if (std::abs(r) <= kZeroTolerance || std::abs(r) <= kCancellationTolerance * scale) return 0.0;
    return r;
}

/// Finite map from key tuples to real coefficients over a sorted attribute schema.
/// Entries are kept sorted by key and never hold a zero coefficient. The empty
/// relation (the ring zero) always has the empty schema.
class RelationValue {
public:
    using Entry = std::pair<KeyTuple, double>;

    RelationValue() = default;

    /// {() -> coeff}
    static RelationValue unit(double coeff = 1.0);
    /// {key -> coeff} over `schema`; schema and key are reordered by attribute id.
    static RelationValue singleton(std::vector<AttrId> schema, KeyTuple key, double coeff = 1.0);
    /// Builds from unsorted entries, summing duplicates and dropping zeros.
    static RelationValue from_entries(std::vector<AttrId> schema, std::vector<Entry> entries);

    const std::vector<AttrId>& schema() const noexcept { return schema_; }
    const std::vector<Entry>& entries() const noexcept { return entries_; }
    bool empty() const noexcept { return entries_.empty(); }
    std::size_t size() const noexcept { return entries_.size(); }

    /// Coefficient of `key`, 0 when absent.
    double at(const KeyTuple& key) const;

    RelationValue& operator+=(const RelationValue& other);
    friend RelationValue operator+(const RelationValue& a, const RelationValue& b);
    /// Natural join: matches on shared attributes, multiplies coefficients.
    friend RelationValue operator*(const RelationValue& a, const RelationValue& b);
    RelationValue operator-() const;

    bool operator==(const RelationValue&) const = default;

private:
    std::vector<AttrId> schema_;
    std::vector<Entry> entries_;
};

template <class R>
concept AggregationRing = std::copy_constructible<R> &&
    requires(const R& r, const typename R::value_type& a, typename R::value_type& acc, AttrId attr,
             const Value& v) {
        { r.zero() } -> std::same_as<typename R::value_type>;
        { r.one() } -> std::same_as<typename R::value_type>;
        { r.add(a, a) } -> std::same_as<typename R::value_type>;
        { r.add_to(acc, a) };
        { r.mul(a, a) } -> std::same_as<typename R::value_type>;
        { r.negate(a) } -> std::same_as<typename R::value_type>;
        { r.is_zero(a) } -> std::same_as<bool>;
        { r.lift(attr, v) } -> std::same_as<typename R::value_type>;
        { r.tracks(attr) } -> std::same_as<bool>;
    };

class IntRing {
public:
    using value_type = std::int64_t;

    value_type zero() const noexcept { return 0; }
    value_type one() const noexcept { return 1; }
    value_type add(value_type a, value_type b) const noexcept { return a + b; }
    void add_to(value_type& acc, value_type a) const noexcept { acc += a; }
    value_type mul(value_type a, value_type b) const noexcept { return a * b; }
    value_type negate(value_type a) const noexcept { return -a; }
    bool is_zero(value_type a) const noexcept { return a == 0; }
    /// Every value counts once.
    value_type lift(AttrId, const Value&) const noexcept { return 1; }
    bool tracks(AttrId) const noexcept { return true; }
};

class RelRing {
public:
    using value_type = RelationValue;

    value_type zero() const { return {}; }
    value_type one() const { return RelationValue::unit(); }
    value_type add(const value_type& a, const value_type& b) const { return a + b; }
    void add_to(value_type& acc, const value_type& a) const { acc += a; }
    value_type mul(const value_type& a, const value_type& b) const { return a * b; }
    value_type negate(const value_type& a) const { return -a; }
    bool is_zero(const value_type& a) const noexcept { return a.empty(); }
    /// {(x) -> 1} over schema (attr)
    value_type lift(AttrId attr, const Value& v) const { return RelationValue::singleton({attr}, {v}); }
    bool tracks(AttrId) const noexcept { return true; }
};

/// Assignment of the m tracked attributes to triple indices, plus their kinds.
class DegreeMLayout {
public:
    DegreeMLayout() = default;
    DegreeMLayout(std::vector<AttrId> attrs, std::vector<AttrKind> kinds);

    std::size_t degree() const noexcept { return attrs_.size(); }
    const std::vector<AttrId>& attrs() const noexcept { return attrs_; }
    AttrKind kind(std::size_t index) const { return kinds_.at(index); }
    std::optional<std::size_t> index_of(AttrId attr) const;

private:
    std::vector<AttrId> attrs_;
    std::vector<AttrKind> kinds_;
    std::unordered_map<AttrId, std::size_t> index_;
};

/// Position of Q[i][j] (either order) in the packed upper triangle of an m x m matrix.
constexpr std::size_t tri_index(std::size_t m, std::size_t i, std::size_t j) noexcept {
    if (i > j) std::swap(i, j);
    return i * (2 * m - i + 1) / 2 + (j - i);
}

template <class E>
struct DegreeMTriple {
    E c{};
    std::vector<E> s;
    std::vector<E> q;  // packed upper triangle

    std::size_t degree() const noexcept { return s.size(); }
    const E& quad(std::size_t i, std::size_t j) const { return q[tri_index(s.size(), i, j)]; }
    E& quad(std::size_t i, std::size_t j) { return q[tri_index(s.size(), i, j)]; }

    bool operator==(const DegreeMTriple&) const = default;
};

template <class E>
struct EntryTraits;

template <>
struct EntryTraits<double> {
    static double zero() noexcept { return 0.0; }
    static double one() noexcept { return 1.0; }
    static double add(double a, double b) noexcept { return cancel_add(a, b); }
    static void add_to(double& acc, double a) noexcept { acc = cancel_add(acc, a); }
    static double mul(double a, double b) noexcept { return a * b; }
    static double negate(double a) noexcept { return -a; }
    static bool is_zero(double a) noexcept { return std::abs(a) <= kZeroTolerance; }
};

template <>
struct EntryTraits<RelationValue> {
    static RelationValue zero() { return {}; }
    static RelationValue one() { return RelationValue::unit(); }
    static RelationValue add(const RelationValue& a, const RelationValue& b) { return a + b; }
    static void add_to(RelationValue& acc, const RelationValue& a) { acc += a; }
    static RelationValue mul(const RelationValue& a, const RelationValue& b) { return a * b; }
    static RelationValue negate(const RelationValue& a) { return -a; }
    static bool is_zero(const RelationValue& a) noexcept { return a.empty(); }
};

/// Degree-m matrix ring. E = double gives the continuous COVAR ring; E =
/// RelationValue composes it with the relational ring so that categorical
/// attributes become group-by relations inside s and Q.
template <class E>
class DegreeMRing {
public:
    using value_type = DegreeMTriple<E>;
    using entry_type = E;
    using T = EntryTraits<E>;

    explicit DegreeMRing(std::shared_ptr<const DegreeMLayout> layout) : layout_(std::move(layout)) {
        if (!layout_) throw RingError("degree-m ring needs a layout");
        if constexpr (std::is_same_v<E, double>) {
            for (std::size_t i = 0; i < layout_->degree(); ++i)
                if (layout_->kind(i) != AttrKind::Continuous)
                    throw RingError("scalar degree-m ring cannot track categorical attributes");
        }
    }

    const DegreeMLayout& layout() const noexcept { return *layout_; }
    std::size_t degree() const noexcept { return layout_->degree(); }

    value_type zero() const {
        const std::size_t m = degree();
        value_type r;
        r.c = T::zero();
        r.s.assign(m, T::zero());
        r.q.assign(m * (m + 1) / 2, T::zero());
        return r;
    }

    value_type one() const {
        value_type r = zero();
        r.c = T::one();
        return r;
    }

    static value_type add(const value_type& a, const value_type& b) {
        value_type r = a;
        add_to(r, b);
        return r;
    }

    static void add_to(value_type& acc, const value_type& a) {
        check(acc, a);
        T::add_to(acc.c, a.c);
        for (std::size_t i = 0; i < a.s.size(); ++i)
            if (!T::is_zero(a.s[i])) T::add_to(acc.s[i], a.s[i]);
        for (std::size_t k = 0; k < a.q.size(); ++k)
            if (!T::is_zero(a.q[k])) T::add_to(acc.q[k], a.q[k]);
    }

    static value_type mul(const value_type& a, const value_type& b) {
        check(a, b);
        const std::size_t m = a.s.size();
        value_type r;
        r.c = T::mul(a.c, b.c);
        r.s.resize(m);
        r.q.resize(a.q.size());
        for (std::size_t i = 0; i < m; ++i) r.s[i] = T::add(scaled(b.c, a.s[i]), scaled(a.c, b.s[i]));
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = i; j < m; ++j) {
                const std::size_t k = tri_index(m, i, j);
                // Grouped so that swapping a and b reproduces the same sums.
                E linear = T::add(scaled(b.c, a.q[k]), scaled(a.c, b.q[k]));
                E cross = T::add(product(a.s[i], b.s[j]), product(b.s[i], a.s[j]));
                r.q[k] = T::add(linear, cross);
            }
        }
        return r;
    }

    static value_type negate(const value_type& a) {
        value_type r;
        r.c = T::negate(a.c);
        r.s.reserve(a.s.size());
        r.q.reserve(a.q.size());
        for (const auto& e : a.s) r.s.push_back(T::negate(e));
        for (const auto& e : a.q) r.q.push_back(T::negate(e));
        return r;
    }

    static bool is_zero(const value_type& a) {
        if (!T::is_zero(a.c)) return false;
        for (const auto& e : a.s)
            if (!T::is_zero(e)) return false;
        for (const auto& e : a.q)
            if (!T::is_zero(e)) return false;
        return true;
    }

    bool tracks(AttrId attr) const { return layout_->index_of(attr).has_value(); }

    /// g_X(x): c = 1, s_X and Q_XX hold x and x^2 for a continuous X, or the
    /// singleton {x -> 1} for a categorical X. Everything else is zero.
    value_type lift(AttrId attr, const Value& v) const {
        auto idx = layout_->index_of(attr);
        if (!idx) throw RingError("attribute " + std::to_string(attr) + " is not tracked by the ring");
        value_type r = one();
        const std::size_t k = tri_index(degree(), *idx, *idx);
        if constexpr (std::is_same_v<E, double>) {
            const double x = to_double(v);
            r.s[*idx] = x;
            r.q[k] = x * x;
        } else {
            if (layout_->kind(*idx) == AttrKind::Continuous) {
                const double x = to_double(v);
                r.s[*idx] = RelationValue::unit(x);
                r.q[k] = RelationValue::unit(x * x);
            } else {
                if (std::holds_alternative<double>(v))
                    throw RingError("categorical attribute lifted with a float value");
                r.s[*idx] = RelationValue::singleton({attr}, {v});
                r.q[k] = r.s[*idx];
            }
        }
        return r;
    }

private:
    static E scaled(const E& c, const E& x) {
        if (T::is_zero(x) || T::is_zero(c)) return T::zero();
        return T::mul(c, x);
    }
    static E product(const E& x, const E& y) {
        if (T::is_zero(x) || T::is_zero(y)) return T::zero();
        return T::mul(x, y);
    }
    static void check(const value_type& a, const value_type& b) {
        if (a.s.size() != b.s.size() || a.q.size() != b.q.size())
            throw RingError("degree-m operands have different degrees");
    }

    std::shared_ptr<const DegreeMLayout> layout_;
};

using ScalarCovarRing = DegreeMRing<double>;
using RelationalCovarRing = DegreeMRing<RelationValue>;
using ScalarTriple = DegreeMTriple<double>;
using RelationalTriple = DegreeMTriple<RelationValue>;

/// v added to itself n times (negated for n < 0), by repeated doubling over add.
template <AggregationRing R>
typename R::value_type scale(const R& ring, const typename R::value_type& v, std::int64_t n) {
    if (n == 1) return v;
    if (n == -1) return ring.negate(v);
    std::uint64_t k = n < 0 ? std::uint64_t{0} - static_cast<std::uint64_t>(n) : static_cast<std::uint64_t>(n);
    auto result = ring.zero();
    auto base = v;
    while (k) {
        if (k & 1) ring.add_to(result, base);
        k >>= 1;
        if (k) base = ring.add(base, base);
    }
    return n < 0 ? ring.negate(result) : result;
}

// Runtime-selected ring and value. The alternatives are index-aligned: the
// value of a RingSpec alternative i is RingValue alternative i.
using RingSpec = std::variant<IntRing, ScalarCovarRing, RelRing, RelationalCovarRing>;
using RingValue = std::variant<std::int64_t, ScalarTriple, RelationValue, RelationalTriple>;

RingValue ring_zero(const RingSpec& spec);
RingValue ring_one(const RingSpec& spec);
/// Throws RingError when a and b come from different rings or degrees.
RingValue ring_add(const RingValue& a, const RingValue& b);
RingValue ring_mul(const RingValue& a, const RingValue& b);
RingValue lift(const RingSpec& spec, AttrId attr, const Value& v);
RingValue negate(const RingSpec& spec, const RingValue& v);
bool is_zero(const RingSpec& spec, const RingValue& v);

}  // namespace rivm
