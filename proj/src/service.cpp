#include "ringivm/service.hpp"

#include <httplib.h>

namespace rivm {

std::string envelope(std::string_view type, std::optional<std::uint64_t> seq, std::string_view payload_json) {
    std::string out = R"({"type":)";
    out += nlohmann::json(std::string(type)).dump();
    out += R"(,"seq":)";
    out += seq ? std::to_string(*seq) : "null";
    out += R"(,"payload":)";
    out += payload_json;
    out += '}';
    return out;
}

void Subscription::push(std::shared_ptr<const std::string> msg, std::uint64_t seq) {
    {
        std::lock_guard lock(mu_);
        if (closed_) return;
        if (items_.size() >= capacity_) {
            items_.pop_front();
            ++dropped_;
        }
        items_.push_back({seq, std::move(msg)});
    }
    cv_.notify_all();
}

std::optional<std::string> Subscription::pop(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, timeout, [&] { return closed_ || !items_.empty(); });
    if (closed_ || items_.empty()) return std::nullopt;
    if (dropped_ > 0) {
        const nlohmann::json payload{{"dropped", dropped_}};
        dropped_ = 0;
        return envelope("gap", items_.front().seq, payload.dump());
    }
    auto item = std::move(items_.front());
    items_.pop_front();
    return *item.msg;
}

void Subscription::close() {
    {
        std::lock_guard lock(mu_);
        closed_ = true;
    }
    cv_.notify_all();
}

bool Subscription::closed() const {
    std::lock_guard lock(mu_);
    return closed_;
}

void SnapshotStore::publish(SnapshotPtr snap) {
    auto msg = std::make_shared<const std::string>(envelope("snapshot", snap->seq, snap->text));
    std::vector<std::shared_ptr<Subscription>> subs;
    {
        std::lock_guard lock(mu_);
        if (messages_.empty()) first_ = snap->seq;
        messages_.push_back(msg);
        while (messages_.size() > history_) {
            messages_.pop_front();
            ++first_;
        }
        latest_ = snap;
        subs = subs_;
    }
    for (auto& s : subs) s->push(msg, snap->seq);
}

std::shared_ptr<const std::string> SnapshotStore::latest() const {
    std::lock_guard lock(mu_);
    return messages_.empty() ? nullptr : messages_.back();
}

std::shared_ptr<const std::string> SnapshotStore::get(std::uint64_t seq) const {
    std::lock_guard lock(mu_);
    if (seq < first_ || seq - first_ >= messages_.size()) return nullptr;
    return messages_[seq - first_];
}

std::optional<std::uint64_t> SnapshotStore::latest_seq() const {
    std::lock_guard lock(mu_);
    if (!latest_) return std::nullopt;
    return latest_->seq;
}

SnapshotPtr SnapshotStore::latest_snapshot() const {
    std::lock_guard lock(mu_);
    return latest_;
}

std::shared_ptr<Subscription> SnapshotStore::subscribe() {
    auto sub = std::make_shared<Subscription>(capacity_);
    std::lock_guard lock(mu_);
    subs_.push_back(sub);
    return sub;
}

void SnapshotStore::unsubscribe(const std::shared_ptr<Subscription>& sub) {
    sub->close();
    std::lock_guard lock(mu_);
    std::erase(subs_, sub);
}

void SnapshotStore::close_all() {
    std::lock_guard lock(mu_);
    for (auto& s : subs_) s->close();
    subs_.clear();
}

std::size_t SnapshotStore::subscribers() const {
    std::lock_guard lock(mu_);
    return subs_.size();
}

namespace {

void send_json(httplib::Response& res, int status, const std::string& body) {
    res.status = status;
    res.set_content(body, "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& reason) {
    send_json(res, status, envelope("error", std::nullopt, nlohmann::json{{"reason", reason}}.dump()));
}

}  // namespace

Service::Service(Engine& engine, ServiceOptions options)
    : engine_(engine),
      options_(std::move(options)),
      store_(options_.history, options_.subscriber_capacity),
      tree_(engine.viewtree()),
      server_(std::make_unique<httplib::Server>()) {
    routes();
}

Service::~Service() { stop(); }

Engine::Publish Service::publisher() {
    return [this](SnapshotPtr s) { store_.publish(std::move(s)); };
}

void Service::routes() {
    server_->set_default_headers({{"Access-Control-Allow-Origin", "*"}});

    server_->Get("/snapshot/latest", [this](const httplib::Request&, httplib::Response& res) {
        auto msg = store_.latest();
        if (!msg) return send_error(res, 404, "no snapshot yet");
        send_json(res, 200, *msg);
    });

    server_->Get(R"(/snapshot/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
        std::uint64_t seq = 0;
        try {
            seq = std::stoull(req.matches[1].str());
        } catch (const std::exception&) {
            return send_error(res, 404, "unknown snapshot " + req.matches[1].str());
        }
        auto msg = store_.get(seq);
        if (!msg) return send_error(res, 404, "unknown snapshot " + std::to_string(seq));
        send_json(res, 200, *msg);
    });

    // Structure is fixed; counts come from the latest snapshot so they match its seq.
    server_->Get("/viewtree", [this](const httplib::Request&, httplib::Response& res) {
        auto tree = tree_;
        auto snap = store_.latest_snapshot();
        std::optional<std::uint64_t> seq;
        if (snap) {
            seq = snap->seq;
            std::map<std::string, std::size_t> counts;
            for (const auto& v : snap->body.at("views")) counts[v.at("id")] = v.at("count");
            for (auto& n : tree["nodes"]) n["count"] = counts[n["id"].get<std::string>()];
        }
        send_json(res, 200, envelope("viewtree", seq, tree.dump()));
    });

    server_->Options("/steer", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });

    server_->Post("/steer", [this](const httplib::Request& req, httplib::Response& res) {
        nlohmann::json body;
        try {
            body = nlohmann::json::parse(req.body);
        } catch (const nlohmann::json::exception& e) {
            return send_error(res, 400, std::string("malformed JSON: ") + e.what());
        }
        SteerCommand cmd;
        try {
            cmd = steer_from_json(body);
        } catch (const Error& e) {
            return send_error(res, 400, e.what());
        }
        if (auto why = engine_.validate(cmd)) {
            return send_json(res, 400,
                             envelope("steer_rejected", std::nullopt,
                                      nlohmann::json{{"reason", *why}, {"command", steer_to_json(cmd)}}.dump()));
        }
        const auto seq = engine_.steering().push(cmd);
        send_json(res, 200, envelope("steer_ack", seq, nlohmann::json{{"command", steer_to_json(cmd)}}.dump()));
    });

    server_->Get("/stream", [this](const httplib::Request&, httplib::Response& res) {
        auto sub = store_.subscribe();
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider(
            "text/event-stream",
            [this, sub](std::size_t, httplib::DataSink& sink) {
                int idle = 0;
                while (!stopping_ && !sub->closed()) {
                    if (!sink.is_writable()) return false;
                    if (auto msg = sub->pop(std::chrono::milliseconds(200))) {
                        const std::string event = "data: " + *msg + "\n\n";
                        if (!sink.write(event.data(), event.size())) return false;
                        idle = 0;
                    } else if (++idle == 50) {
                        static constexpr char kKeepAlive[] = ": keepalive\n\n";
                        if (!sink.write(kKeepAlive, sizeof kKeepAlive - 1)) return false;
                        idle = 0;
                    }
                }
                sink.done();
                return true;
            },
            [this, sub](bool) { store_.unsubscribe(sub); });
    });
}

int Service::start() {
    if (options_.port == 0)
        port_ = server_->bind_to_any_port(options_.host);
    else
        port_ = server_->bind_to_port(options_.host, options_.port) ? options_.port : -1;
    if (port_ < 0) throw Error("cannot bind " + options_.host + ":" + std::to_string(options_.port));
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port_;
}

void Service::stop() {
    if (stopping_.exchange(true)) return;
    store_.close_all();
    server_->stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace rivm
