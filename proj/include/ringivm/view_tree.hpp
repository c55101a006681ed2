#pragma once

#include "ringivm/relation.hpp"

#include <nlohmann/json.hpp>

#include <set>

namespace rivm {

/// User-supplied tree shape. A node with `relation` set is a leaf over that base
/// relation; every other node joins its children and groups by `key`.
struct TreeNodeConfig {
    std::string id;
    std::vector<std::string> key;
    std::optional<std::string> relation;
    std::vector<TreeNodeConfig> children;
};

TreeNodeConfig tree_config_from_json(const nlohmann::json& j);
nlohmann::json tree_config_to_json(const TreeNodeConfig& config);

struct ViewNode {
    std::string id;
    std::vector<AttrId> key;
    std::optional<std::size_t> relation;  // set for leaves
    std::vector<std::size_t> children;
    std::optional<std::size_t> parent;
    std::size_t position_in_parent = 0;

    // Leaves only: where key and lifted attributes sit in the base tuple.
    std::vector<std::size_t> key_positions;
    std::vector<std::pair<AttrId, std::size_t>> lifted;

    bool is_leaf() const noexcept { return relation.has_value(); }
};

namespace detail {

/// How one sibling view is reached while extending a partial join tuple.
struct Probe {
    enum class Access { Point, Index, Scan };
    std::size_t child = 0;  // position in the node's children
    Access access = Access::Scan;
    std::size_t index = 0;                             // Index access only
    std::vector<std::size_t> lookup_slots;             // values forming the lookup key
    std::vector<std::pair<std::size_t, std::size_t>> binds;  // (child key position, slot)
};

/// Join of one driving child with all its siblings, projected to the node key.
struct JoinPlan {
    std::vector<std::size_t> seed_slots;  // slot of each driving-child key position
    std::vector<Probe> probes;
    std::vector<std::size_t> out_slots;
};

}  // namespace detail

/// Tree of materialized views over base relations (leaves) with the query at the
/// root. Every view maps its group-by key to the ring sum, over the join of its
/// children, of the product of child payloads. Updates to a base relation are
/// propagated along the leaf-to-root path only.
template <AggregationRing R>
class ViewTree {
public:
    using Payload = typename R::value_type;
    using View = KeyedRelation<R>;

    ViewTree(const TreeNodeConfig& config, std::vector<RelationSchema> relations, const Catalog& catalog, R ring)
        : relations_(std::move(relations)), ring_(std::move(ring)) {
        build(config, catalog);
    }

    const R& ring() const noexcept { return ring_; }
    const std::vector<RelationSchema>& relations() const noexcept { return relations_; }
    std::size_t node_count() const noexcept { return nodes_.size(); }
    const ViewNode& node(std::size_t i) const { return nodes_.at(i); }
    static constexpr std::size_t root_index() noexcept { return 0; }
    const View& view(std::size_t i) const { return views_.at(i); }
    const View& root() const { return views_.front(); }
    const BaseRelation& base(std::size_t relation) const { return bases_.at(relation); }
    std::size_t leaf_of(std::size_t relation) const { return leaf_of_.at(relation); }

    /// Root payload for the empty key; zero when the query result is empty.
    Payload root_payload() const {
        if (!nodes_.front().key.empty()) throw ValidationError("root is grouped; use root()");
        auto* p = root().find(KeyTuple{});
        return p ? *p : ring_.zero();
    }

    /// Loads the base relations and materializes every view bottom-up.
    void initialize(std::vector<BaseRelation> bases) {
        if (bases.size() != relations_.size()) throw ValidationError("expected one base relation per schema");
        for (std::size_t r = 0; r < bases.size(); ++r)
            if (bases[r].schema() != relations_[r].attrs)
                throw ValidationError("base relation " + relations_[r].name + " does not match its schema");
        bases_ = std::move(bases);
        recompute();
    }

    /// Rebuilds every view from the current base relations.
    void recompute() {
        for (std::size_t i = nodes_.size(); i-- > 0;) {
            views_[i].clear();
            if (nodes_[i].is_leaf())
                fill_leaf(i, bases_[*nodes_[i].relation], views_[i]);
            else
                fill_node(i, views_[i]);
        }
    }

    /// Applies deltas to the base relations only. Views are stale until recompute().
    void update_bases(std::span<const Delta> deltas) {
        for (const auto& d : deltas) {
            if (d.relation >= relations_.size()) throw ValidationError("update targets unknown relation");
            bases_[d.relation].apply_delta(d.tuple, d.multiplicity);
        }
    }

    /// The view of a leaf computed from `base` (which need not be the stored base).
    View evaluate_leaf(std::size_t leaf, const BaseRelation& base) const {
        if (!nodes_.at(leaf).is_leaf()) throw ValidationError("not a leaf: " + nodes_[leaf].id);
        if (base.schema() != relations_[*nodes_[leaf].relation].attrs)
            throw ValidationError("base relation does not match leaf schema");
        View out(nodes_[leaf].key, ring_);
        fill_leaf(leaf, base, out);
        return out;
    }

    /// The view of an internal node computed from its children's current views.
    View evaluate_node(std::size_t n) const {
        View out(nodes_.at(n).key, ring_);
        if (nodes_[n].is_leaf())
            fill_leaf(n, bases_[*nodes_[n].relation], out);
        else
            fill_node(n, out);
        return out;
    }

    /// Applies one relation's deltas to its base, its leaf and every ancestor.
    /// Returns the root delta. Views off the leaf-to-root path are not touched.
    View propagate(const UpdateBatch& batch) {
        if (batch.relation >= relations_.size()) throw ValidationError("update targets unknown relation");
        std::size_t n = leaf_of_[batch.relation];
        BaseRelation& base = bases_[batch.relation];
        View delta(nodes_[n].key, ring_);
        for (const auto& [tuple, mult] : batch.deltas) {
            base.apply_delta(tuple, mult);
            add_lifted(n, tuple, mult, delta);
        }
        views_[n].merge(delta);
        while (nodes_[n].parent) {
            const std::size_t p = *nodes_[n].parent;
            View up(nodes_[p].key, ring_);
            if (!delta.empty()) run_plan(p, plans_[p][nodes_[n].position_in_parent], delta, up);
            views_[p].merge(up);
            delta = std::move(up);
            n = p;
        }
        return delta;
    }

    /// Groups a mixed batch per relation and propagates the groups in relation order.
    View apply(std::span<const Delta> deltas) {
        View root_delta(nodes_.front().key, ring_);
        for (const auto& batch : group_by_relation(deltas, relations_.size())) root_delta.merge(propagate(batch));
        return root_delta;
    }

    /// `{nodes:[{id,key,relation?,count,sql}], edges:[[parent,child]]}`
    nlohmann::json describe(const Catalog& catalog) const {
        nlohmann::json nodes = nlohmann::json::array();
        nlohmann::json edges = nlohmann::json::array();
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const auto& n = nodes_[i];
            nlohmann::json j;
            j["id"] = n.id;
            j["key"] = nlohmann::json::array();
            for (auto a : n.key) j["key"].push_back(catalog.name(a));
            if (n.relation) j["relation"] = relations_[*n.relation].name;
            j["count"] = views_[i].size();
            j["sql"] = render_sql(i, catalog);
            nodes.push_back(std::move(j));
            for (auto c : n.children) edges.push_back({n.id, nodes_[c].id});
        }
        return {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
    }

    /// Pseudo-SQL for the aggregate query defining a view.
    std::string render_sql(std::size_t i, const Catalog& catalog) const {
        const auto& n = nodes_.at(i);
        std::string keys;
        for (auto a : n.key) keys += (keys.empty() ? "" : ", ") + catalog.name(a);
        std::string sum;
        std::string from;
        if (n.is_leaf()) {
            if constexpr (std::is_same_v<R, IntRing>) {
                sum = "1";
            } else {
                for (const auto& [attr, pos] : n.lifted)
                    sum += (sum.empty() ? "" : "*") + ("g_" + catalog.name(attr) + "(" + catalog.name(attr) + ")");
                if (sum.empty()) sum = "1";
            }
            from = relations_[*n.relation].name;
        } else {
            for (auto c : n.children) {
                sum += (sum.empty() ? "" : " * ") + nodes_[c].id;
                from += (from.empty() ? "" : " NATURAL JOIN ") + nodes_[c].id;
            }
        }
        std::string sql = "SELECT ";
        if (!keys.empty()) sql += keys + ", ";
        sql += "SUM(" + sum + ") FROM " + from;
        if (!keys.empty()) sql += " GROUP BY " + keys;
        return sql;
    }

private:
    void build(const TreeNodeConfig& config, const Catalog& catalog) {
        std::unordered_map<std::string, std::size_t> rel_by_name;
        for (std::size_t r = 0; r < relations_.size(); ++r)
            if (!rel_by_name.emplace(relations_[r].name, r).second)
                throw ValidationError("duplicate relation " + relations_[r].name);
        leaf_of_.assign(relations_.size(), SIZE_MAX);

        std::set<std::string> ids;
        add_node(config, std::nullopt, 0, catalog, rel_by_name, ids);

        for (std::size_t r = 0; r < relations_.size(); ++r)
            if (leaf_of_[r] == SIZE_MAX) throw ValidationError("relation " + relations_[r].name + " has no leaf");

        check_running_intersection(catalog);

        for (std::size_t i = 0; i < nodes_.size(); ++i) views_.emplace_back(nodes_[i].key, ring_);
        bases_.clear();
        for (const auto& rel : relations_) bases_.emplace_back(rel.attrs);

        plans_.resize(nodes_.size());
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            if (nodes_[i].is_leaf()) continue;
            for (std::size_t c = 0; c < nodes_[i].children.size(); ++c) plans_[i].push_back(make_plan(i, c));
        }
    }

    std::size_t add_node(const TreeNodeConfig& cfg, std::optional<std::size_t> parent, std::size_t position,
                         const Catalog& catalog, const std::unordered_map<std::string, std::size_t>& rel_by_name,
                         std::set<std::string>& ids) {
        const std::size_t index = nodes_.size();
        nodes_.emplace_back();
        {
            ViewNode& n = nodes_.back();
            n.id = cfg.id.empty() ? "V" + std::to_string(index) : cfg.id;
            n.parent = parent;
            n.position_in_parent = position;
            if (!ids.insert(n.id).second) throw ValidationError("duplicate view id " + n.id);
            std::set<AttrId> seen;
            for (const auto& name : cfg.key) {
                auto a = catalog.find(name);
                if (!a) throw ValidationError("view " + n.id + ": unknown attribute " + name);
                if (!seen.insert(*a).second) throw ValidationError("view " + n.id + ": attribute " + name + " repeated");
                n.key.push_back(*a);
            }
        }

        if (cfg.relation) {
            ViewNode& n = nodes_[index];
            if (!cfg.children.empty()) throw ValidationError("leaf " + n.id + " cannot have children");
            auto it = rel_by_name.find(*cfg.relation);
            if (it == rel_by_name.end()) throw ValidationError("leaf " + n.id + ": unknown relation " + *cfg.relation);
            if (leaf_of_[it->second] != SIZE_MAX)
                throw ValidationError("relation " + *cfg.relation + " appears in more than one leaf");
            leaf_of_[it->second] = index;
            n.relation = it->second;
            const auto& attrs = relations_[it->second].attrs;
            for (auto a : n.key) {
                auto pos = std::find(attrs.begin(), attrs.end(), a);
                if (pos == attrs.end())
                    throw ValidationError("leaf " + n.id + ": key attribute " + catalog.name(a) + " not in relation " +
                                          *cfg.relation);
                n.key_positions.push_back(static_cast<std::size_t>(pos - attrs.begin()));
            }
            for (std::size_t p = 0; p < attrs.size(); ++p) {
                if (std::find(n.key.begin(), n.key.end(), attrs[p]) != n.key.end()) continue;
                if (!ring_.tracks(attrs[p]))
                    throw ValidationError("leaf " + n.id + ": attribute " + catalog.name(attrs[p]) +
                                          " is aggregated away but not tracked by the ring");
                n.lifted.push_back({attrs[p], p});
            }
            return index;
        }

        if (cfg.children.empty()) throw ValidationError("view " + nodes_[index].id + " has no children and no relation");
        for (std::size_t c = 0; c < cfg.children.size(); ++c) {
            const std::size_t child = add_node(cfg.children[c], index, c, catalog, rel_by_name, ids);
            nodes_[index].children.push_back(child);
        }
        std::set<AttrId> below;
        for (auto c : nodes_[index].children) below.insert(nodes_[c].key.begin(), nodes_[c].key.end());
        for (auto a : nodes_[index].key)
            if (!below.count(a))
                throw ValidationError("view " + nodes_[index].id + ": key attribute " + catalog.name(a) +
                                      " is not a key of any child");
        return index;
    }

    /// Attributes of base relations in the subtree of each node.
    std::vector<std::set<AttrId>> subtree_attrs() const {
        std::vector<std::set<AttrId>> out(nodes_.size());
        for (std::size_t i = nodes_.size(); i-- > 0;) {
            if (nodes_[i].is_leaf()) {
                const auto& attrs = relations_[*nodes_[i].relation].attrs;
                out[i].insert(attrs.begin(), attrs.end());
            }
            for (auto c : nodes_[i].children) out[i].insert(out[c].begin(), out[c].end());
        }
        return out;
    }

    // An attribute aggregated away at a node must not occur in any base relation
    // outside that node's subtree.
    void check_running_intersection(const Catalog& catalog) const {
        const auto inside = subtree_attrs();
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            for (auto a : inside[i]) {
                if (std::find(nodes_[i].key.begin(), nodes_[i].key.end(), a) != nodes_[i].key.end()) continue;
                // Does `a` occur in a relation outside subtree i?
                for (std::size_t r = 0; r < relations_.size(); ++r) {
                    const std::size_t leaf = leaf_of_[r];
                    if (in_subtree(leaf, i)) continue;
                    const auto& attrs = relations_[r].attrs;
                    if (std::find(attrs.begin(), attrs.end(), a) != attrs.end())
                        throw ValidationError("running intersection violated: attribute " + catalog.name(a) +
                                              " is aggregated away at view " + nodes_[i].id +
                                              " but occurs in relation " + relations_[r].name +
                                              " outside its subtree");
                }
            }
        }
    }

    bool in_subtree(std::size_t n, std::size_t ancestor) const {
        for (std::optional<std::size_t> cur = n; cur; cur = nodes_[*cur].parent)
            if (*cur == ancestor) return true;
        return false;
    }

    detail::JoinPlan make_plan(std::size_t n, std::size_t driver) {
        const ViewNode& node = nodes_[n];
        std::unordered_map<AttrId, std::size_t> slot;
        for (auto c : node.children)
            for (auto a : nodes_[c].key) slot.emplace(a, slot.size());
        slot_count_.resize(nodes_.size());
        slot_count_[n] = slot.size();

        detail::JoinPlan plan;
        std::set<AttrId> bound;
        for (auto a : nodes_[node.children[driver]].key) {
            plan.seed_slots.push_back(slot.at(a));
            bound.insert(a);
        }
        std::vector<std::size_t> remaining;
        for (std::size_t c = 0; c < node.children.size(); ++c)
            if (c != driver) remaining.push_back(c);

        while (!remaining.empty()) {
            // Prefer full-key lookups, then the most bound attributes.
            std::size_t best = 0;
            std::pair<int, std::size_t> best_score{-1, 0};
            for (std::size_t r = 0; r < remaining.size(); ++r) {
                const auto& key = nodes_[node.children[remaining[r]]].key;
                std::size_t hits = 0;
                for (auto a : key) hits += bound.count(a);
                const int full = hits == key.size() ? 2 : (hits > 0 ? 1 : 0);
                if (std::pair{full, hits} > best_score) {
                    best_score = {full, hits};
                    best = r;
                }
            }
            const std::size_t c = remaining[best];
            remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));

            const auto& key = nodes_[node.children[c]].key;
            detail::Probe probe;
            probe.child = c;
            std::vector<std::size_t> positions;
            for (std::size_t p = 0; p < key.size(); ++p) {
                if (bound.count(key[p])) {
                    positions.push_back(p);
                    probe.lookup_slots.push_back(slot.at(key[p]));
                } else {
                    probe.binds.push_back({p, slot.at(key[p])});
                }
            }
            if (positions.size() == key.size()) {
                probe.access = detail::Probe::Access::Point;
            } else if (positions.empty()) {
                probe.access = detail::Probe::Access::Scan;
            } else {
                probe.access = detail::Probe::Access::Index;
                probe.index = views_[node.children[c]].add_index(positions);
            }
            for (auto a : key) bound.insert(a);
            plan.probes.push_back(std::move(probe));
        }
        for (auto a : node.key) plan.out_slots.push_back(slot.at(a));
        return plan;
    }

    void add_lifted(std::size_t leaf, const KeyTuple& tuple, std::int64_t mult, View& out) const {
        const ViewNode& n = nodes_[leaf];
        KeyTuple key;
        key.reserve(n.key_positions.size());
        for (auto p : n.key_positions) key.push_back(tuple[p]);
        if constexpr (std::is_same_v<R, IntRing>) {
            out.apply_delta(key, mult);
        } else {
            Payload product = ring_.one();
            for (const auto& [attr, pos] : n.lifted) product = ring_.mul(product, ring_.lift(attr, tuple[pos]));
            out.apply_delta(key, scale(ring_, product, mult));
        }
    }

    void fill_leaf(std::size_t leaf, const BaseRelation& base, View& out) const {
        for (const auto& [tuple, mult] : base) add_lifted(leaf, tuple, mult, out);
    }

    void fill_node(std::size_t n, View& out) const {
        const auto& children = nodes_[n].children;
        // Drive the join from the smallest child; the others are probed.
        std::size_t driver = 0;
        for (std::size_t c = 1; c < children.size(); ++c)
            if (views_[children[c]].size() < views_[children[driver]].size()) driver = c;
        run_plan(n, plans_[n][driver], views_[children[driver]], out);
    }

    void run_plan(std::size_t n, const detail::JoinPlan& plan, const View& driver, View& out) const {
        std::vector<Value> slots(slot_count_[n]);
        KeyTuple scratch;
        for (const auto& [key, payload] : driver) {
            for (std::size_t i = 0; i < key.size(); ++i) slots[plan.seed_slots[i]] = key[i];
            extend(n, plan, 0, slots, payload, scratch, out);
        }
    }

    void extend(std::size_t n, const detail::JoinPlan& plan, std::size_t depth, std::vector<Value>& slots,
                const Payload& acc, KeyTuple& scratch, View& out) const {
        if (depth == plan.probes.size()) {
            KeyTuple key;
            key.reserve(plan.out_slots.size());
            for (auto s : plan.out_slots) key.push_back(slots[s]);
            out.apply_delta(key, acc);
            return;
        }
        const auto& probe = plan.probes[depth];
        const View& child = views_[nodes_[n].children[probe.child]];
        auto visit = [&](const KeyTuple& key, const Payload& payload) {
            for (auto [pos, s] : probe.binds) slots[s] = key[pos];
            extend(n, plan, depth + 1, slots, ring_.mul(acc, payload), scratch, out);
        };
        switch (probe.access) {
            case detail::Probe::Access::Point: {
                scratch.clear();
                for (auto s : probe.lookup_slots) scratch.push_back(slots[s]);
                if (auto* p = child.find(scratch)) visit(scratch, *p);
                break;
            }
            case detail::Probe::Access::Index: {
                scratch.clear();
                for (auto s : probe.lookup_slots) scratch.push_back(slots[s]);
                // The span stays valid: only `out` is written during the walk.
                for (const auto* e : child.probe(probe.index, scratch)) visit(e->first, e->second);
                break;
            }
            case detail::Probe::Access::Scan:
                for (const auto& [key, payload] : child) visit(key, payload);
                break;
        }
    }

    std::vector<RelationSchema> relations_;
    R ring_;
    std::vector<ViewNode> nodes_;
    std::vector<View> views_;
    std::vector<BaseRelation> bases_;
    std::vector<std::size_t> leaf_of_;
    std::vector<std::vector<detail::JoinPlan>> plans_;
    std::vector<std::size_t> slot_count_;
};

}  // namespace rivm
