#pragma once

#include "ringivm/value.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <optional>
#include <variant>

namespace rivm {

namespace steer {
struct SetLabel {
    std::string attribute;
};
struct SetThreshold {
    double value = 0;
};
struct SetFeatures {
    std::vector<std::string> features;
};
struct SetLambda {
    double value = 0;
};
struct Pause {};
struct Resume {};
}  // namespace steer

using SteerCommand = std::variant<steer::SetLabel, steer::SetThreshold, steer::SetFeatures, steer::SetLambda,
                                  steer::Pause, steer::Resume>;

/// `{"type": "set_label", "attribute": ...}`, `{"type": "set_threshold", "value": ...}`,
/// `{"type": "set_features", "features": [...]}`, `{"type": "set_lambda", "value": ...}`,
/// `{"type": "pause"}`, `{"type": "resume"}`.
SteerCommand steer_from_json(const nlohmann::json& j);
nlohmann::json steer_to_json(const SteerCommand& cmd);

/// Analytics parameters the UI can change at runtime.
struct SteeringState {
    std::optional<std::string> label;
    double threshold = 0;
    std::vector<std::string> features;  // empty: all tracked attributes but the label
    double lambda = 0;
    bool paused = false;

    void apply(const SteerCommand& cmd);
    nlohmann::json to_json() const;
};

/// Commands flowing from the service to the engine. The engine drains the
/// queue right before building each snapshot; `push` reports the sequence
/// number of the first snapshot that will reflect the command.
class SteerQueue {
public:
    std::uint64_t push(SteerCommand cmd);

    /// Applies every queued command to `state`. Unless `state` ends up paused,
    /// snapshot `seq` is sealed: commands pushed afterwards are acknowledged
    /// for `seq + 1`. Returns whether it sealed.
    bool drain_into(SteeringState& state, std::uint64_t seq);

    /// Blocks until a command is queued, `stop` is requested or the timeout
    /// elapses. Returns true if commands are waiting.
    bool wait(std::chrono::milliseconds timeout);

    /// Sleeps for `duration` unless stop is requested first. Returns false if stopped.
    bool sleep(std::chrono::milliseconds duration);

    void request_stop();
    bool stop_requested() const;

private:
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<SteerCommand> queue_;
    std::uint64_t next_seq_ = 0;
    bool stop_ = false;
};

}  // namespace rivm
