#pragma once

#include "ringivm/analytics.hpp"
#include "ringivm/config.hpp"
#include "ringivm/steering.hpp"

#include <functional>
#include <map>
#include <memory>

namespace rivm {

/// Immutable per-snapshot export. `text` is the serialized `body`.
struct Snapshot {
    std::uint64_t seq = 0;
    nlohmann::json body;
    std::string text;
};
using SnapshotPtr = std::shared_ptr<const Snapshot>;

/// Analytics inputs resolved to attribute ids.
struct AnalyticsParams {
    std::optional<AttrId> label;
    std::vector<AttrId> features;
    double threshold = 0;
    double lambda = 0;
};

/// Ring-specific half of the engine: owns the view tree and the warm-start model.
class Backend {
public:
    virtual ~Backend() = default;
    virtual void initialize(std::vector<BaseRelation> bases) = 0;
    /// Incremental maintenance of one batch.
    virtual void apply(std::span<const Delta> deltas) = 0;
    /// Applies the batch to the base relations and rebuilds every view.
    virtual void recompute(std::span<const Delta> deltas) = 0;
    virtual nlohmann::json root_json(const Catalog& catalog) const = 0;
    virtual nlohmann::json analytics(const AnalyticsParams& params, const Catalog& catalog) = 0;
    virtual nlohmann::json describe(const Catalog& catalog) const = 0;
    virtual std::vector<std::pair<std::string, std::size_t>> view_counts() const = 0;
};

struct EngineOptions {
    bool oracle = false;     // recompute from scratch instead of propagating deltas
    bool analytics = true;   // skip models (benchmarks)
    bool pause = true;       // honor pause_ms
};

/// What a tracked attribute is, for steering validation.
struct TrackedAttribute {
    AttrId id = 0;
    std::string name;
    AttrKind kind = AttrKind::Continuous;  // kind inside the ring (binned attributes are categorical)
    bool binned = false;
};

/// Loads the data, maintains the view tree over the update stream and emits a
/// snapshot after the initial load and after every batch.
class Engine {
public:
    using Publish = std::function<void(SnapshotPtr)>;

    explicit Engine(EngineConfig config, EngineOptions options = {});
    ~Engine();

    const EngineConfig& config() const noexcept { return config_; }
    const Catalog& catalog() const noexcept { return catalog_; }
    const std::vector<RelationSchema>& relations() const noexcept { return relations_; }
    const std::vector<TrackedAttribute>& tracked() const noexcept { return tracked_; }
    const std::map<AttrId, BinSpec>& bins() const noexcept { return bins_; }
    SteerQueue& steering() noexcept { return queue_; }

    /// Reason the command would be rejected, or nullopt.
    std::optional<std::string> validate(const SteerCommand& cmd) const;

    /// describe() of the view tree; its structure never changes after construction.
    nlohmann::json viewtree() const;

    /// Processes the whole stream, publishing every snapshot. With `linger`,
    /// keeps answering steering commands with fresh snapshots after the stream
    /// ends until stop is requested on the steering queue.
    void run(const Publish& publish, bool linger = false);

    std::uint64_t snapshots() const noexcept { return seq_; }
    std::uint64_t updates() const noexcept { return updates_; }
    double propagate_seconds() const noexcept { return propagate_s_; }

private:
    void load();
    void bin_tuple(std::size_t relation, KeyTuple& tuple) const;
    AnalyticsParams resolve() const;
    bool seal();
    void emit(const Publish& publish, double propagate_ms);

    EngineConfig config_;
    EngineOptions options_;
    Catalog catalog_;
    std::vector<RelationSchema> relations_;
    std::vector<TrackedAttribute> tracked_;
    std::map<AttrId, BinSpec> bins_;
    std::unique_ptr<Backend> backend_;
    std::unique_ptr<UpdateStreamReader> reader_;
    SteerQueue queue_;
    SteeringState state_;

    std::uint64_t seq_ = 0;
    std::uint64_t batches_ = 0;
    std::uint64_t updates_ = 0;
    double propagate_s_ = 0;
    bool exhausted_ = false;
};

/// Writes each snapshot as one line of JSON.
Engine::Publish ndjson_writer(std::ostream& out);

/// Runs the engine incrementally and with the recompute oracle over the same
/// stream; reports throughput of both and the speedup.
nlohmann::json bench(const EngineConfig& config);

struct WorkloadOptions {
    std::uint64_t seed = 1;
    std::size_t tuples = 10000;  // total over all relations in the initial load
    std::size_t relations = 3;   // one fact plus relations-1 dimensions
    double delete_fraction = 0.2;
    std::size_t updates = 0;     // 0: tuples / 2
    double skew = 1.0;           // 1 uniform; larger concentrates fact keys on small ids
    Mode mode = Mode::Covar;
    std::size_t batch_size = 1000;
};

/// Writes CSVs, updates.csv and config.json into `dir`. Returns the config path.
std::filesystem::path gen_workload(const WorkloadOptions& options, const std::filesystem::path& dir);

}  // namespace rivm
