#include "ringivm/ring.hpp"

#include <numeric>

namespace rivm {

RelationValue RelationValue::unit(double coeff) {
    RelationValue r;
    if (std::abs(coeff) > kZeroTolerance) r.entries_.push_back({KeyTuple{}, coeff});
    return r;
}

RelationValue RelationValue::singleton(std::vector<AttrId> schema, KeyTuple key, double coeff) {
    if (schema.size() != key.size()) throw RingError("key arity does not match relation schema");
    std::vector<Entry> entries;
    entries.push_back({std::move(key), coeff});
    return from_entries(std::move(schema), std::move(entries));
}

RelationValue RelationValue::from_entries(std::vector<AttrId> schema, std::vector<Entry> entries) {
    std::vector<std::size_t> order(schema.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto x, auto y) { return schema[x] < schema[y]; });
    for (std::size_t i = 1; i < order.size(); ++i)
        if (schema[order[i]] == schema[order[i - 1]]) throw RingError("duplicate attribute in relation schema");

    RelationValue r;
    if (!std::is_sorted(order.begin(), order.end())) {
        for (auto& [key, coeff] : entries) {
            if (key.size() != schema.size()) throw RingError("key arity does not match relation schema");
            KeyTuple permuted;
            permuted.reserve(key.size());
            for (auto o : order) permuted.push_back(std::move(key[o]));
            key = std::move(permuted);
        }
        std::vector<AttrId> sorted;
        for (auto o : order) sorted.push_back(schema[o]);
        schema = std::move(sorted);
    } else {
        for (const auto& e : entries)
            if (e.first.size() != schema.size()) throw RingError("key arity does not match relation schema");
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) { return x.first < y.first; });
    for (auto& e : entries) {
        if (!r.entries_.empty() && r.entries_.back().first == e.first) {
            r.entries_.back().second = cancel_add(r.entries_.back().second, e.second);
            if (r.entries_.back().second == 0.0) r.entries_.pop_back();
        } else if (std::abs(e.second) > kZeroTolerance) {
            r.entries_.push_back(std::move(e));
        }
    }
    if (!r.entries_.empty()) r.schema_ = std::move(schema);
    return r;
}

double RelationValue::at(const KeyTuple& key) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), key,
                               [](const Entry& e, const KeyTuple& k) { return e.first < k; });
    if (it == entries_.end() || it->first != key) return 0.0;
    return it->second;
}

RelationValue& RelationValue::operator+=(const RelationValue& other) {
    if (other.empty()) return *this;
    if (empty()) return *this = other;
    *this = *this + other;
    return *this;
}

RelationValue operator+(const RelationValue& a, const RelationValue& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    if (a.schema_ != b.schema_) throw RingError("cannot add relations over different schemas");
    RelationValue r;
    r.entries_.reserve(a.entries_.size() + b.entries_.size());
    auto i = a.entries_.begin();
    auto j = b.entries_.begin();
    while (i != a.entries_.end() && j != b.entries_.end()) {
        if (i->first < j->first) {
            r.entries_.push_back(*i++);
        } else if (j->first < i->first) {
            r.entries_.push_back(*j++);
        } else {
            const double sum = cancel_add(i->second, j->second);
            if (sum != 0.0) r.entries_.push_back({i->first, sum});
            ++i;
            ++j;
        }
    }
    r.entries_.insert(r.entries_.end(), i, a.entries_.end());
    r.entries_.insert(r.entries_.end(), j, b.entries_.end());
    if (!r.entries_.empty()) r.schema_ = a.schema_;
    return r;
}

RelationValue operator*(const RelationValue& a, const RelationValue& b) {
    if (a.empty() || b.empty()) return {};
    RelationValue r;

    // One side over the empty schema: plain scaling keeps key order.
    if (a.schema_.empty() || b.schema_.empty()) {
        const RelationValue& rel = a.schema_.empty() ? b : a;
        const double factor = a.schema_.empty() ? a.entries_.front().second : b.entries_.front().second;
        r.entries_.reserve(rel.entries_.size());
        for (const auto& [key, coeff] : rel.entries_) {
            const double v = coeff * factor;
            if (v != 0.0) r.entries_.push_back({key, v});
        }
        if (!r.entries_.empty()) r.schema_ = rel.schema_;
        return r;
    }

    // Same schema: intersection.
    if (a.schema_ == b.schema_) {
        auto i = a.entries_.begin();
        auto j = b.entries_.begin();
        while (i != a.entries_.end() && j != b.entries_.end()) {
            if (i->first < j->first) {
                ++i;
            } else if (j->first < i->first) {
                ++j;
            } else {
                const double v = i->second * j->second;
                if (v != 0.0) r.entries_.push_back({i->first, v});
                ++i;
                ++j;
            }
        }
        if (!r.entries_.empty()) r.schema_ = a.schema_;
        return r;
    }

    // General case: merged schema, output position -> (side, position).
    std::vector<AttrId> schema;
    std::vector<std::pair<int, std::size_t>> source;
    std::vector<std::pair<std::size_t, std::size_t>> shared;
    std::size_t i = 0, j = 0;
    while (i < a.schema_.size() || j < b.schema_.size()) {
        if (j == b.schema_.size() || (i < a.schema_.size() && a.schema_[i] < b.schema_[j])) {
            schema.push_back(a.schema_[i]);
            source.push_back({0, i++});
        } else if (i == a.schema_.size() || b.schema_[j] < a.schema_[i]) {
            schema.push_back(b.schema_[j]);
            source.push_back({1, j++});
        } else {
            schema.push_back(a.schema_[i]);
            source.push_back({0, i});
            shared.push_back({i++, j++});
        }
    }

    auto emit = [&](const RelationValue::Entry& x, const RelationValue::Entry& y) {
        const double v = x.second * y.second;
        if (v == 0.0) return;
        KeyTuple key;
        key.reserve(source.size());
        for (auto [side, pos] : source) key.push_back(side == 0 ? x.first[pos] : y.first[pos]);
        r.entries_.push_back({std::move(key), v});
    };

    if (shared.empty() || a.entries_.size() * b.entries_.size() <= 64) {
        for (const auto& x : a.entries_) {
            for (const auto& y : b.entries_) {
                bool match = true;
                for (auto [pa, pb] : shared)
                    if (x.first[pa] != y.first[pb]) {
                        match = false;
                        break;
                    }
                if (match) emit(x, y);
            }
        }
    } else {
        std::unordered_multimap<KeyTuple, std::size_t, KeyHash> probe;
        probe.reserve(b.entries_.size());
        for (std::size_t n = 0; n < b.entries_.size(); ++n) {
            KeyTuple k;
            for (auto [pa, pb] : shared) k.push_back(b.entries_[n].first[pb]);
            probe.emplace(std::move(k), n);
        }
        KeyTuple k;
        for (const auto& x : a.entries_) {
            k.clear();
            for (auto [pa, pb] : shared) k.push_back(x.first[pa]);
            auto [lo, hi] = probe.equal_range(k);
            for (auto it = lo; it != hi; ++it) emit(x, b.entries_[it->second]);
        }
    }
    // Output keys are unique: each determines both input keys.
    std::sort(r.entries_.begin(), r.entries_.end(),
              [](const RelationValue::Entry& x, const RelationValue::Entry& y) { return x.first < y.first; });
    if (!r.entries_.empty()) r.schema_ = std::move(schema);
    return r;
}

RelationValue RelationValue::operator-() const {
    RelationValue r = *this;
    for (auto& e : r.entries_) e.second = -e.second;
    return r;
}

DegreeMLayout::DegreeMLayout(std::vector<AttrId> attrs, std::vector<AttrKind> kinds)
    : attrs_(std::move(attrs)), kinds_(std::move(kinds)) {
    if (attrs_.size() != kinds_.size()) throw RingError("layout needs one kind per attribute");
    for (std::size_t i = 0; i < attrs_.size(); ++i)
        if (!index_.emplace(attrs_[i], i).second) throw RingError("attribute tracked twice in layout");
}

std::optional<std::size_t> DegreeMLayout::index_of(AttrId attr) const {
    auto it = index_.find(attr);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

namespace {

template <class F>
RingValue binary(const RingValue& a, const RingValue& b, F&& f) {
    if (a.index() != b.index()) throw RingError("operands come from different rings");
    return std::visit(
        [&](const auto& x) -> RingValue {
            using V = std::decay_t<decltype(x)>;
            return f(x, std::get<V>(b));
        },
        a);
}

}  // namespace

RingValue ring_zero(const RingSpec& spec) {
    return std::visit([](const auto& r) -> RingValue { return r.zero(); }, spec);
}

RingValue ring_one(const RingSpec& spec) {
    return std::visit([](const auto& r) -> RingValue { return r.one(); }, spec);
}

RingValue ring_add(const RingValue& a, const RingValue& b) {
    return binary(a, b, []<class V>(const V& x, const V& y) -> RingValue {
        if constexpr (std::is_same_v<V, std::int64_t>) {
            return IntRing{}.add(x, y);
        } else if constexpr (std::is_same_v<V, RelationValue>) {
            return x + y;
        } else {
            return DegreeMRing<std::decay_t<decltype(x.c)>>::add(x, y);
        }
    });
}

RingValue ring_mul(const RingValue& a, const RingValue& b) {
    return binary(a, b, []<class V>(const V& x, const V& y) -> RingValue {
        if constexpr (std::is_same_v<V, std::int64_t>) {
            return IntRing{}.mul(x, y);
        } else if constexpr (std::is_same_v<V, RelationValue>) {
            return x * y;
        } else {
            return DegreeMRing<std::decay_t<decltype(x.c)>>::mul(x, y);
        }
    });
}

RingValue lift(const RingSpec& spec, AttrId attr, const Value& v) {
    return std::visit([&](const auto& r) -> RingValue { return r.lift(attr, v); }, spec);
}

RingValue negate(const RingSpec& spec, const RingValue& v) {
    if (spec.index() != v.index()) throw RingError("value does not belong to the ring");
    return std::visit(
        [&](const auto& r) -> RingValue {
            using R = std::decay_t<decltype(r)>;
            return r.negate(std::get<typename R::value_type>(v));
        },
        spec);
}

bool is_zero(const RingSpec& spec, const RingValue& v) {
    if (spec.index() != v.index()) throw RingError("value does not belong to the ring");
    return std::visit(
        [&](const auto& r) {
            using R = std::decay_t<decltype(r)>;
            return r.is_zero(std::get<typename R::value_type>(v));
        },
        spec);
}

}  // namespace rivm
