#include "ringivm/steering.hpp"

#include <cmath>

namespace rivm {

namespace {

double finite(const nlohmann::json& j, const char* field) {
    const double v = j.at(field).get<double>();
    if (!std::isfinite(v)) throw ValidationError(std::string(field) + " must be finite");
    return v;
}

}  // namespace

SteerCommand steer_from_json(const nlohmann::json& j) {
    try {
        const auto type = j.at("type").get<std::string>();
        if (type == "set_label") return steer::SetLabel{j.at("attribute").get<std::string>()};
        if (type == "set_threshold") return steer::SetThreshold{finite(j, "value")};
        if (type == "set_features") return steer::SetFeatures{j.at("features").get<std::vector<std::string>>()};
        if (type == "set_lambda") return steer::SetLambda{finite(j, "value")};
        if (type == "pause") return steer::Pause{};
        if (type == "resume") return steer::Resume{};
        throw ValidationError("unknown steering command '" + type + "'");
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed steering command: ") + e.what());
    }
}

nlohmann::json steer_to_json(const SteerCommand& cmd) {
    return std::visit(
        [](const auto& c) -> nlohmann::json {
            using C = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<C, steer::SetLabel>) return {{"type", "set_label"}, {"attribute", c.attribute}};
            if constexpr (std::is_same_v<C, steer::SetThreshold>) return {{"type", "set_threshold"}, {"value", c.value}};
            if constexpr (std::is_same_v<C, steer::SetFeatures>) return {{"type", "set_features"}, {"features", c.features}};
            if constexpr (std::is_same_v<C, steer::SetLambda>) return {{"type", "set_lambda"}, {"value", c.value}};
            if constexpr (std::is_same_v<C, steer::Pause>) return {{"type", "pause"}};
            if constexpr (std::is_same_v<C, steer::Resume>) return {{"type", "resume"}};
        },
        cmd);
}

void SteeringState::apply(const SteerCommand& cmd) {
    std::visit(
        [this](const auto& c) {
            using C = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<C, steer::SetLabel>) label = c.attribute;
            if constexpr (std::is_same_v<C, steer::SetThreshold>) threshold = c.value;
            if constexpr (std::is_same_v<C, steer::SetFeatures>) features = c.features;
            if constexpr (std::is_same_v<C, steer::SetLambda>) lambda = c.value;
            if constexpr (std::is_same_v<C, steer::Pause>) paused = true;
            if constexpr (std::is_same_v<C, steer::Resume>) paused = false;
        },
        cmd);
}

nlohmann::json SteeringState::to_json() const {
    return {{"label", label ? nlohmann::json(*label) : nlohmann::json()},
            {"threshold", threshold},
            {"features", features},
            {"lambda", lambda},
            {"paused", paused}};
}

std::uint64_t SteerQueue::push(SteerCommand cmd) {
    std::uint64_t seq;
    {
        std::lock_guard lock(mu_);
        queue_.push_back(std::move(cmd));
        seq = next_seq_;
    }
    cv_.notify_all();
    return seq;
}

bool SteerQueue::drain_into(SteeringState& state, std::uint64_t seq) {
    std::lock_guard lock(mu_);
    for (const auto& cmd : queue_) state.apply(cmd);
    queue_.clear();
    if (state.paused) {
        next_seq_ = seq;
        return false;
    }
    next_seq_ = seq + 1;
    return true;
}

bool SteerQueue::wait(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, timeout, [&] { return stop_ || !queue_.empty(); });
    return !queue_.empty();
}

bool SteerQueue::sleep(std::chrono::milliseconds duration) {
    std::unique_lock lock(mu_);
    return !cv_.wait_for(lock, duration, [&] { return stop_; });
}

void SteerQueue::request_stop() {
    {
        std::lock_guard lock(mu_);
        stop_ = true;
    }
    cv_.notify_all();
}

bool SteerQueue::stop_requested() const {
    std::lock_guard lock(mu_);
    return stop_;
}

}  // namespace rivm
