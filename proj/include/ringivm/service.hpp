#pragma once

#include "ringivm/engine.hpp"

#include <atomic>
#include <thread>

namespace httplib {
class Server;
}

namespace rivm {

/// `{"type": ..., "seq": ..., "payload": ...}`. A null `seq` serializes as null.
std::string envelope(std::string_view type, std::optional<std::uint64_t> seq, std::string_view payload_json);

/// Bounded queue of messages for one stream subscriber. When full, the oldest
/// message is dropped and the next pop is preceded by a gap marker.
class Subscription {
public:
    explicit Subscription(std::size_t capacity) : capacity_(capacity) {}

    void push(std::shared_ptr<const std::string> msg, std::uint64_t seq);
    /// Waits up to `timeout`; nullopt on timeout or close.
    std::optional<std::string> pop(std::chrono::milliseconds timeout);
    void close();
    bool closed() const;

private:
    struct Item {
        std::uint64_t seq;
        std::shared_ptr<const std::string> msg;
    };

    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<Item> items_;
    std::size_t capacity_;
    std::uint64_t dropped_ = 0;
    bool closed_ = false;
};

/// Immutable snapshot history plus broadcast to subscribers.
class SnapshotStore {
public:
    explicit SnapshotStore(std::size_t history = 100000, std::size_t subscriber_capacity = 256)
        : history_(history), capacity_(subscriber_capacity) {}

    void publish(SnapshotPtr snap);
    /// The envelope-wrapped snapshot, or null.
    std::shared_ptr<const std::string> latest() const;
    std::shared_ptr<const std::string> get(std::uint64_t seq) const;
    std::optional<std::uint64_t> latest_seq() const;
    SnapshotPtr latest_snapshot() const;

    std::shared_ptr<Subscription> subscribe();
    void unsubscribe(const std::shared_ptr<Subscription>& sub);
    void close_all();
    std::size_t subscribers() const;

private:
    mutable std::mutex mu_;
    std::size_t history_;
    std::size_t capacity_;
    std::uint64_t first_ = 0;  // seq of messages_.front()
    std::deque<std::shared_ptr<const std::string>> messages_;
    SnapshotPtr latest_;
    std::vector<std::shared_ptr<Subscription>> subs_;
};

struct ServiceOptions {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::size_t history = 100000;
    std::size_t subscriber_capacity = 256;
};

/// HTTP front of a running engine:
///   GET /snapshot/latest, GET /snapshot/{seq}, GET /viewtree, POST /steer,
///   GET /stream (server-sent events, one envelope per event).
class Service {
public:
    Service(Engine& engine, ServiceOptions options = {});
    ~Service();

    /// Binds and starts serving on a background thread. Returns the bound port.
    int start();
    void stop();
    int port() const noexcept { return port_; }

    SnapshotStore& store() noexcept { return store_; }
    Engine::Publish publisher();

private:
    void routes();

    Engine& engine_;
    ServiceOptions options_;
    SnapshotStore store_;
    nlohmann::json tree_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    std::atomic<bool> stopping_{false};
    int port_ = 0;
};

}  // namespace rivm
