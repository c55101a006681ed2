#pragma once

#include "ringivm/ring.hpp"

#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <span>
#include <string>

namespace rivm {

/// Name and column order of a base relation.
struct RelationSchema {
    std::string name;
    std::vector<AttrId> attrs;
};

struct RelationStats {
    std::size_t keys = 0;
    std::size_t payload_bytes = 0;
    bool operator==(const RelationStats&) const = default;
};

inline std::size_t payload_bytes(std::int64_t) { return sizeof(std::int64_t); }
inline std::size_t payload_bytes(double) { return sizeof(double); }
inline std::size_t payload_bytes(const RelationValue& r) {
    std::size_t n = sizeof(RelationValue) + r.schema().size() * sizeof(AttrId);
    for (const auto& [key, coeff] : r.entries()) n += key.size() * sizeof(Value) + sizeof(coeff);
    return n;
}
template <class E>
std::size_t payload_bytes(const DegreeMTriple<E>& t) {
    std::size_t n = payload_bytes(t.c);
    for (const auto& e : t.s) n += payload_bytes(e);
    for (const auto& e : t.q) n += payload_bytes(e);
    return n;
}

/// Finite map KeyTuple -> ring payload. No stored payload is zero: a write that
/// cancels a payload evicts its key. Keys iterate in sorted order.
///
/// Secondary indexes over a subset of key positions can be registered; they are
/// maintained on every write and serve the lookups of delta joins.
template <AggregationRing R>
class KeyedRelation {
public:
    using Payload = typename R::value_type;
    using Map = std::map<KeyTuple, Payload>;
    using Entry = typename Map::value_type;

    explicit KeyedRelation(std::vector<AttrId> schema = {}, R ring = R{})
        : schema_(std::move(schema)), ring_(std::move(ring)) {}

    KeyedRelation(const KeyedRelation& other)
        : schema_(other.schema_), ring_(other.ring_), data_(other.data_) {
        for (const auto& idx : other.indexes_) add_index(idx.positions);
    }
    KeyedRelation& operator=(const KeyedRelation& other) {
        if (this != &other) {
            KeyedRelation copy(other);
            *this = std::move(copy);
        }
        return *this;
    }
    KeyedRelation(KeyedRelation&&) noexcept = default;
    KeyedRelation& operator=(KeyedRelation&&) noexcept = default;

    const std::vector<AttrId>& schema() const noexcept { return schema_; }
    const R& ring() const noexcept { return ring_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }
    auto begin() const noexcept { return data_.begin(); }
    auto end() const noexcept { return data_.end(); }
    const Map& data() const noexcept { return data_; }

    const Payload* find(const KeyTuple& key) const {
        auto it = data_.find(key);
        return it == data_.end() ? nullptr : &it->second;
    }

    /// payload(key) += dv, evicting the key when the sum is zero.
    void apply_delta(const KeyTuple& key, const Payload& dv) {
        if (key.size() != schema_.size())
            throw ValidationError("key arity " + std::to_string(key.size()) + " does not match schema arity " +
                                  std::to_string(schema_.size()));
        if (ring_.is_zero(dv)) return;
        auto [it, inserted] = data_.try_emplace(key, dv);
        if (inserted) {
            index_insert(*it);
            return;
        }
        ring_.add_to(it->second, dv);
        if (ring_.is_zero(it->second)) {
            index_erase(*it);
            data_.erase(it);
        }
    }

    /// Adds every entry of `delta` into this relation.
    void merge(const KeyedRelation& delta) {
        for (const auto& [k, v] : delta) apply_delta(k, v);
    }

    void clear() {
        data_.clear();
        for (auto& idx : indexes_) idx.buckets.clear();
    }

    /// Registers (or reuses) an index over the given key positions; returns its id.
    std::size_t add_index(std::vector<std::size_t> positions) {
        for (std::size_t i = 0; i < indexes_.size(); ++i)
            if (indexes_[i].positions == positions) return i;
        for (auto p : positions)
            if (p >= schema_.size()) throw ValidationError("index position out of range");
        indexes_.push_back({std::move(positions), {}});
        auto& idx = indexes_.back();
        for (const auto& e : data_) idx.buckets[project(e.first, idx.positions)].push_back(&e);
        return indexes_.size() - 1;
    }

    std::size_t index_count() const noexcept { return indexes_.size(); }

    /// Entries whose key projected on the index positions equals `subkey`.
    std::span<const Entry* const> probe(std::size_t index, const KeyTuple& subkey) const {
        const auto& buckets = indexes_.at(index).buckets;
        auto it = buckets.find(subkey);
        if (it == buckets.end()) return {};
        return it->second;
    }

    RelationStats stats() const {
        RelationStats s;
        s.keys = data_.size();
        for (const auto& [k, v] : data_) s.payload_bytes += k.size() * sizeof(Value) + payload_bytes(v);
        return s;
    }

    /// Same keys and payloads; indexes are not compared.
    bool operator==(const KeyedRelation& other) const { return schema_ == other.schema_ && data_ == other.data_; }

private:
    struct Index {
        std::vector<std::size_t> positions;
        std::unordered_map<KeyTuple, std::vector<const Entry*>, KeyHash> buckets;
    };

    static KeyTuple project(const KeyTuple& key, const std::vector<std::size_t>& positions) {
        KeyTuple out;
        out.reserve(positions.size());
        for (auto p : positions) out.push_back(key[p]);
        return out;
    }

    void index_insert(const Entry& e) {
        for (auto& idx : indexes_) idx.buckets[project(e.first, idx.positions)].push_back(&e);
    }

    void index_erase(const Entry& e) {
        for (auto& idx : indexes_) {
            auto it = idx.buckets.find(project(e.first, idx.positions));
            if (it == idx.buckets.end()) continue;
            auto& vec = it->second;
            auto pos = std::find(vec.begin(), vec.end(), &e);
            if (pos != vec.end()) {
                *pos = vec.back();
                vec.pop_back();
            }
            if (vec.empty()) idx.buckets.erase(it);
        }
    }

    std::vector<AttrId> schema_;
    R ring_;
    Map data_;
    std::vector<Index> indexes_;
};

using BaseRelation = KeyedRelation<IntRing>;

/// Headerless CSV, one tuple per line, columns in schema order. Each row adds
/// multiplicity 1, so duplicate rows accumulate. Blank lines are skipped.
BaseRelation load_csv(const std::string& path, const RelationSchema& schema, Catalog& catalog);
BaseRelation load_csv(std::istream& in, const RelationSchema& schema, Catalog& catalog);

/// One signed change to a base relation.
struct Delta {
    std::size_t relation = 0;  // index into the relation list
    KeyTuple tuple;
    std::int64_t multiplicity = 0;
};

/// Deltas targeting one relation.
struct UpdateBatch {
    std::size_t relation = 0;
    std::vector<std::pair<KeyTuple, std::int64_t>> deltas;
};

/// Reads lines `relation,+-mult,v1,...,vk`. Lines starting with '#' and blank
/// lines are skipped. Yields deltas in file order.
class UpdateStreamReader {
public:
    UpdateStreamReader(std::istream& in, const std::vector<RelationSchema>& relations, Catalog& catalog);
    UpdateStreamReader(const std::string& path, const std::vector<RelationSchema>& relations, Catalog& catalog);

    std::optional<Delta> next();
    /// Up to `n` deltas; fewer only at end of stream.
    std::vector<Delta> next_batch(std::size_t n);
    std::size_t line() const noexcept { return line_; }

private:
    std::unique_ptr<std::ifstream> owned_;
    std::istream* in_;
    const std::vector<RelationSchema>& relations_;
    Catalog& catalog_;
    std::size_t line_ = 0;
};

/// Parses a single update line (no comment handling).
Delta parse_update_line(std::string_view text, const std::vector<RelationSchema>& relations, Catalog& catalog);

/// Groups deltas per relation, relations in list order, deltas in stream order.
std::vector<UpdateBatch> group_by_relation(std::span<const Delta> deltas, std::size_t relation_count);

}  // namespace rivm
