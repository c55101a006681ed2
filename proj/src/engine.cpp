#include "ringivm/engine.hpp"

#include <chrono>
#include <cmath>
#include <ostream>
#include <set>
#include <thread>

namespace rivm {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

nlohmann::json value_json(const Value& v, const Catalog& catalog) {
    return std::visit(
        [&](const auto& x) -> nlohmann::json {
            if constexpr (std::is_same_v<std::decay_t<decltype(x)>, Category>)
                return catalog.strings().name(x);
            else
                return x;
        },
        v);
}

nlohmann::json key_json(const KeyTuple& key, const Catalog& catalog) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& v : key) out.push_back(value_json(v, catalog));
    return out;
}

nlohmann::json names_json(const std::vector<AttrId>& attrs, const Catalog& catalog) {
    nlohmann::json out = nlohmann::json::array();
    for (auto a : attrs) out.push_back(catalog.name(a));
    return out;
}

nlohmann::json payload_json(std::int64_t v, const Catalog&) { return v; }
nlohmann::json payload_json(double v, const Catalog&) { return v; }

/// `{schema: [...], entries: [[k1, ..., kn, coeff], ...]}`
nlohmann::json payload_json(const RelationValue& r, const Catalog& catalog) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& [key, coeff] : r.entries()) {
        auto row = key_json(key, catalog);
        row.push_back(coeff);
        entries.push_back(std::move(row));
    }
    return {{"schema", names_json(r.schema(), catalog)}, {"entries", std::move(entries)}};
}

template <class E>
nlohmann::json payload_json(const DegreeMTriple<E>& t, const Catalog& catalog) {
    nlohmann::json s = nlohmann::json::array(), q = nlohmann::json::array();
    for (const auto& e : t.s) s.push_back(payload_json(e, catalog));
    for (const auto& e : t.q) q.push_back(payload_json(e, catalog));
    return {{"c", payload_json(t.c, catalog)}, {"s", std::move(s)}, {"q", std::move(q)}};
}

/// A COVAR grid cell: a number when `dim` is 0, otherwise the entries of the
/// grouped relation as `[category..., value]` rows.
nlohmann::json cell_json(double v, int, const Catalog&) { return {{"dim", 0}, {"value", v}}; }
nlohmann::json cell_json(const RelationValue& r, int dim, const Catalog& catalog) {
    if (dim == 0) return {{"dim", 0}, {"value", r.at({})}};
    auto p = payload_json(r, catalog);
    return {{"dim", dim}, {"entries", std::move(p["entries"])}};
}

double unit_value(double v) { return v; }
double unit_value(const RelationValue& r) { return r.at({}); }

template <class E>
nlohmann::json covar_grid(const DegreeMTriple<E>& t, const DegreeMLayout& layout, const Catalog& catalog) {
    const std::size_t m = layout.degree();
    auto cat = [&](std::size_t i) { return layout.kind(i) == AttrKind::Categorical ? 1 : 0; };
    nlohmann::json attrs = nlohmann::json::array();
    nlohmann::json linear = nlohmann::json::array();
    nlohmann::json quadratic = nlohmann::json::array();
    for (std::size_t i = 0; i < m; ++i) {
        attrs.push_back({{"name", catalog.name(layout.attrs()[i])}, {"kind", cat(i) ? "categorical" : "continuous"}});
        linear.push_back(cell_json(t.s[i], cat(i), catalog));
        for (std::size_t j = i; j < m; ++j) {
            auto cell = cell_json(t.quad(i, j), i == j ? cat(i) : cat(i) + cat(j), catalog);
            cell["row"] = i;
            cell["col"] = j;
            quadratic.push_back(std::move(cell));
        }
    }
    return {{"attributes", std::move(attrs)},
            {"count", unit_value(t.c)},
            {"linear", std::move(linear)},
            {"quadratic", std::move(quadratic)}};
}

nlohmann::json matrix_json(const SquareMatrix& m) {
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t i = 0; i < m.n; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < m.n; ++j) row.push_back(m(i, j));
        out.push_back(std::move(row));
    }
    return out;
}

template <AggregationRing R>
class TreeBackend final : public Backend {
public:
    TreeBackend(const EngineConfig& config, const std::vector<RelationSchema>& relations, const Catalog& catalog,
                R ring, std::shared_ptr<const DegreeMLayout> layout)
        : mode_(config.mode), layout_(std::move(layout)), tree_(config.tree, relations, catalog, std::move(ring)) {}

    void initialize(std::vector<BaseRelation> bases) override { tree_.initialize(std::move(bases)); }
    void apply(std::span<const Delta> deltas) override { tree_.apply(deltas); }
    void recompute(std::span<const Delta> deltas) override {
        tree_.update_bases(deltas);
        tree_.recompute();
    }

    nlohmann::json root_json(const Catalog& catalog) const override {
        nlohmann::json entries = nlohmann::json::array();
        for (const auto& [key, payload] : tree_.root())
            entries.push_back({{"key", key_json(key, catalog)}, {"value", payload_json(payload, catalog)}});
        return {{"schema", names_json(tree_.node(0).key, catalog)}, {"entries", std::move(entries)}};
    }

    nlohmann::json describe(const Catalog& catalog) const override { return tree_.describe(catalog); }

    std::vector<std::pair<std::string, std::size_t>> view_counts() const override {
        std::vector<std::pair<std::string, std::size_t>> out;
        for (std::size_t i = 0; i < tree_.node_count(); ++i) out.push_back({tree_.node(i).id, tree_.view(i).size()});
        return out;
    }

    nlohmann::json analytics(const AnalyticsParams& params, const Catalog& catalog) override {
        try {
            if constexpr (std::is_same_v<R, IntRing>) {
                std::int64_t total = 0;
                for (const auto& [key, v] : tree_.root()) total += v;
                return {{"count", total}, {"groups", tree_.root().size()}};
            } else if constexpr (std::is_same_v<R, RelRing>) {
                return nlohmann::json::object();
            } else {
                if (!tree_.node(0).key.empty()) throw ValidationError("analytics need a root without group-by");
                const auto root = tree_.root_payload();
                if (mode_ == Mode::MI) {
                    if constexpr (std::is_same_v<R, RelationalCovarRing>) return mi(root, params, catalog);
                }
                return covar(root, params, catalog);
            }
        } catch (const Error& e) {
            return {{"error", e.what()}};
        }
    }

private:
    using Triple = typename R::value_type;

    nlohmann::json covar(const Triple& root, const AnalyticsParams& params, const Catalog& catalog) {
        nlohmann::json out;
        out["matrix"] = covar_grid(root, *layout_, catalog);
        if (!params.label) {
            out["error"] = "no continuous label";
            return out;
        }
        out["label"] = catalog.name(*params.label);
        try {
            const auto sys = assemble_covar(root, *layout_, *params.label, params.features);
            nlohmann::json features = nlohmann::json::array();
            for (std::size_t i = 0; i < sys.index.size(); ++i) features.push_back(sys.index.label(i, catalog));
            out["n"] = sys.n;
            out["features"] = std::move(features);
            out["xtx"] = matrix_json(sys.xtx);
            out["xty"] = sys.xty;
            const auto theta0 = warm_start(model_ ? &*model_ : nullptr, sys.index);
            model_ = train_ridge(sys, params.lambda, theta0);
            out["model"] = {{"theta", model_->theta},
                            {"lambda", model_->lambda},
                            {"iterations", model_->iterations},
                            {"gradient_norm", model_->gradient_norm},
                            {"tolerance", default_tolerance(sys)},
                            {"converged", model_->converged}};
        } catch (const Error& e) {
            out["error"] = e.what();
        }
        return out;
    }

    nlohmann::json mi(const RelationalTriple& root, const AnalyticsParams& params, const Catalog& catalog) {
        const auto m = mi_matrix(root, *layout_);
        nlohmann::json out;
        out["attributes"] = names_json(m.attrs, catalog);
        out["matrix"] = matrix_json(m.values);
        out["threshold"] = params.threshold;
        if (params.label) {
            out["label"] = catalog.name(*params.label);
            nlohmann::json ranking = nlohmann::json::array();
            for (const auto& r : select_features(m, *params.label, params.threshold))
                ranking.push_back({{"attribute", catalog.name(r.attr)}, {"mi", r.mi}, {"selected", r.selected}});
            out["ranking"] = std::move(ranking);
        } else {
            out["label"] = nullptr;
        }
        const auto tree = chow_liu(m.values);
        nlohmann::json edges = nlohmann::json::array();
        for (auto [i, j] : tree.edges) edges.push_back({catalog.name(m.attrs[i]), catalog.name(m.attrs[j])});
        out["chow_liu"] = {{"edges", std::move(edges)}, {"weight", tree.weight}};
        return out;
    }

    Mode mode_;
    std::shared_ptr<const DegreeMLayout> layout_;
    ViewTree<R> tree_;
    std::optional<Model> model_;
};

}  // namespace

Engine::Engine(EngineConfig config, EngineOptions options) : config_(std::move(config)), options_(options) {
    relations_ = register_schemas(config_, catalog_);

    for (auto a : lifted_attributes(config_, catalog_)) {
        const auto& info = catalog_.at(a);
        TrackedAttribute t{a, info.name, info.kind, false};
        if (config_.mode == Mode::MI && info.kind == AttrKind::Continuous) {
            t.kind = AttrKind::Categorical;
            t.binned = true;
        }
        tracked_.push_back(t);
    }
    std::vector<AttrId> attrs;
    std::vector<AttrKind> kinds;
    bool all_continuous = true;
    for (const auto& t : tracked_) {
        attrs.push_back(t.id);
        kinds.push_back(t.kind);
        all_continuous = all_continuous && t.kind == AttrKind::Continuous;
    }
    auto layout = std::make_shared<const DegreeMLayout>(attrs, kinds);

    switch (config_.mode) {
        case Mode::Count:
            backend_ = std::make_unique<TreeBackend<IntRing>>(config_, relations_, catalog_, IntRing{}, layout);
            break;
        case Mode::Covar:
            if (all_continuous)
                backend_ = std::make_unique<TreeBackend<ScalarCovarRing>>(config_, relations_, catalog_,
                                                                          ScalarCovarRing{layout}, layout);
            else
                backend_ = std::make_unique<TreeBackend<RelationalCovarRing>>(config_, relations_, catalog_,
                                                                              RelationalCovarRing{layout}, layout);
            break;
        case Mode::MI:
            backend_ = std::make_unique<TreeBackend<RelationalCovarRing>>(config_, relations_, catalog_,
                                                                          RelationalCovarRing{layout}, layout);
            break;
    }

    state_.label = config_.label;
    state_.features = config_.features;
    state_.threshold = config_.mi_threshold;
    state_.lambda = config_.lambda;
    if (config_.label)
        if (auto why = validate(steer::SetLabel{*config_.label})) throw ValidationError("config label: " + *why);
    if (!config_.features.empty())
        if (auto why = validate(steer::SetFeatures{config_.features})) throw ValidationError("config features: " + *why);

    load();
}

Engine::~Engine() = default;

void Engine::load() {
    std::vector<BaseRelation> bases;
    for (std::size_t r = 0; r < relations_.size(); ++r) {
        const auto& rc = config_.relations[r];
        if (rc.csv.empty())
            bases.emplace_back(relations_[r].attrs);
        else
            bases.push_back(load_csv(config_.resolve(rc.csv).string(), relations_[r], catalog_));
    }

    // Bin edges come from the initial load and stay fixed.
    for (const auto& t : tracked_) {
        if (!t.binned) continue;
        std::vector<double> values;
        for (std::size_t r = 0; r < relations_.size(); ++r) {
            const auto& attrs = relations_[r].attrs;
            auto pos = std::find(attrs.begin(), attrs.end(), t.id);
            if (pos == attrs.end()) continue;
            for (const auto& [tuple, m] : bases[r]) values.push_back(to_double(tuple[pos - attrs.begin()]));
        }
        bins_[t.id] = make_bins(values, config_.bins);
    }
    if (!bins_.empty()) {
        for (std::size_t r = 0; r < relations_.size(); ++r) {
            BaseRelation binned(relations_[r].attrs);
            for (const auto& [tuple, m] : bases[r]) {
                KeyTuple t = tuple;
                bin_tuple(r, t);
                binned.apply_delta(t, m);
            }
            bases[r] = std::move(binned);
        }
    }
    backend_->initialize(std::move(bases));

    if (!config_.updates.empty())
        reader_ = std::make_unique<UpdateStreamReader>(config_.resolve(config_.updates).string(), relations_, catalog_);
}

void Engine::bin_tuple(std::size_t relation, KeyTuple& tuple) const {
    const auto& attrs = relations_[relation].attrs;
    for (std::size_t i = 0; i < attrs.size(); ++i) {
        auto it = bins_.find(attrs[i]);
        if (it != bins_.end()) tuple[i] = it->second.bin(to_double(tuple[i]));
    }
}

std::optional<std::string> Engine::validate(const SteerCommand& cmd) const {
    auto find = [&](const std::string& name) -> const TrackedAttribute* {
        for (const auto& t : tracked_)
            if (t.name == name) return &t;
        return nullptr;
    };
    return std::visit(
        [&](const auto& c) -> std::optional<std::string> {
            using C = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<C, steer::SetLabel>) {
                if (config_.mode == Mode::Count) return "count mode has no label";
                const auto* t = find(c.attribute);
                if (!t) return "unknown or untracked attribute " + c.attribute;
                if (config_.mode == Mode::Covar && t->kind != AttrKind::Continuous)
                    return "label " + c.attribute + " is categorical; covar mode needs a continuous label";
            } else if constexpr (std::is_same_v<C, steer::SetFeatures>) {
                std::set<std::string> seen;
                for (const auto& f : c.features) {
                    if (!find(f)) return "unknown or untracked attribute " + f;
                    if (!seen.insert(f).second) return "feature " + f + " listed twice";
                }
            } else if constexpr (std::is_same_v<C, steer::SetThreshold>) {
                if (!std::isfinite(c.value)) return "threshold must be finite";
            } else if constexpr (std::is_same_v<C, steer::SetLambda>) {
                if (!std::isfinite(c.value) || c.value < 0) return "lambda must be finite and non-negative";
            }
            return std::nullopt;
        },
        cmd);
}

nlohmann::json Engine::viewtree() const { return backend_->describe(catalog_); }

AnalyticsParams Engine::resolve() const {
    AnalyticsParams p;
    p.threshold = state_.threshold;
    p.lambda = state_.lambda;
    if (state_.label) {
        p.label = catalog_.id(*state_.label);
    } else if (config_.mode == Mode::Covar) {
        for (const auto& t : tracked_)
            if (t.kind == AttrKind::Continuous) p.label = t.id;
    }
    if (!state_.features.empty()) {
        for (const auto& f : state_.features) p.features.push_back(catalog_.id(f));
    } else {
        for (const auto& t : tracked_) p.features.push_back(t.id);
    }
    if (p.label) std::erase(p.features, *p.label);
    return p;
}

bool Engine::seal() {
    while (!queue_.drain_into(state_, seq_)) {
        if (queue_.stop_requested()) return false;
        queue_.wait(std::chrono::milliseconds(50));
    }
    return true;
}

void Engine::emit(const Publish& publish, double propagate_ms) {
    if (!publish) {
        ++seq_;
        return;
    }
    const auto t0 = Clock::now();
    const auto params = resolve();
    nlohmann::json analytics = options_.analytics ? backend_->analytics(params, catalog_) : nlohmann::json::object();
    if (!bins_.empty()) {
        nlohmann::json bins = nlohmann::json::object();
        for (const auto& [a, b] : bins_) bins[catalog_.name(a)] = {{"min", b.min}, {"max", b.max}, {"k", b.k}};
        analytics["bins"] = std::move(bins);
    }
    const double analytics_ms = ms_since(t0);

    auto snap = std::make_shared<Snapshot>();
    snap->seq = seq_;
    nlohmann::json views = nlohmann::json::array();
    for (const auto& [id, count] : backend_->view_counts()) views.push_back({{"id", id}, {"count", count}});
    nlohmann::json steering = state_.to_json();
    steering["effective_label"] = params.label ? nlohmann::json(catalog_.name(*params.label)) : nlohmann::json();
    snap->body = {{"seq", seq_},
                  {"batches", batches_},
                  {"updates", updates_},
                  {"mode", to_string(config_.mode)},
                  {"oracle", options_.oracle},
                  {"root", backend_->root_json(catalog_)},
                  {"steering", std::move(steering)},
                  {"analytics", std::move(analytics)},
                  {"timing",
                   {{"propagate_ms", propagate_ms},
                    {"analytics_ms", analytics_ms},
                    {"total_propagate_ms", propagate_s_ * 1000},
                    {"throughput", propagate_s_ > 0 ? static_cast<double>(updates_) / propagate_s_ : 0.0}}},
                  {"views", std::move(views)}};
    snap->text = snap->body.dump();
    ++seq_;
    publish(std::move(snap));
}

void Engine::run(const Publish& publish, bool linger) {
    if (seq_ == 0) {
        if (!seal()) return;
        emit(publish, 0);
    }
    const auto pause = std::chrono::milliseconds(options_.pause ? config_.effective_pause_ms() : 0);
    while (reader_ && !exhausted_) {
        std::vector<Delta> batch;
        try {
            batch = reader_->next_batch(config_.batch_size);
        } catch (const Error& e) {
            throw Error("batch " + std::to_string(batches_ + 1) + ": " + e.what());
        }
        if (batch.empty()) {
            exhausted_ = true;
            break;
        }
        if (pause.count() > 0 && !queue_.sleep(pause)) return;
        if (!seal()) return;
        try {
            for (auto& d : batch) bin_tuple(d.relation, d.tuple);
            const auto t0 = Clock::now();
            if (options_.oracle)
                backend_->recompute(batch);
            else
                backend_->apply(batch);
            const double ms = ms_since(t0);
            propagate_s_ += ms / 1000;
            ++batches_;
            updates_ += batch.size();
            emit(publish, ms);
        } catch (const Error& e) {
            throw Error("batch " + std::to_string(batches_ + 1) + ": " + e.what());
        }
    }
    while (linger && !queue_.stop_requested()) {
        if (!queue_.wait(std::chrono::milliseconds(100))) continue;
        if (!seal()) return;
        emit(publish, 0);
    }
}

Engine::Publish ndjson_writer(std::ostream& out) {
    return [&out](SnapshotPtr s) { out << s->text << '\n' << std::flush; };
}

nlohmann::json bench(const EngineConfig& config) {
    EngineOptions inc_opt{false, false, false};
    EngineOptions orc_opt{true, false, false};
    nlohmann::json inc_root, orc_root;
    auto capture_last = [](nlohmann::json& slot) {
        return [&slot](SnapshotPtr s) { slot = s->body["root"]; };
    };
    Engine inc(config, inc_opt);
    inc.run(capture_last(inc_root));
    Engine orc(config, orc_opt);
    orc.run(capture_last(orc_root));

    auto side = [](const Engine& e) {
        const double ms = e.propagate_seconds() * 1000;
        return nlohmann::json{{"propagate_ms", ms},
                              {"throughput", e.propagate_seconds() > 0 ? e.updates() / e.propagate_seconds() : 0.0}};
    };
    const double speedup = inc.propagate_seconds() > 0 ? orc.propagate_seconds() / inc.propagate_seconds() : 0.0;
    return {{"mode", to_string(config.mode)},
            {"updates", inc.updates()},
            {"batches", inc.snapshots() - 1},
            {"batch_size", config.batch_size},
            {"incremental", side(inc)},
            {"oracle", side(orc)},
            {"speedup", speedup},
            {"roots_equal", inc_root == orc_root}};
}

}  // namespace rivm
