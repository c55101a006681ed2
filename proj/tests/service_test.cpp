#include "ringivm/service.hpp"
#include "engine_support.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <thread>

using namespace rivm;
using namespace rivm::testing;

namespace {

nlohmann::json get_json(httplib::Client& cli, const std::string& path, int want_status = 200) {
    auto res = cli.Get(path);
    EXPECT_TRUE(res) << path;
    if (!res) return {};
    EXPECT_EQ(res->status, want_status) << path << ": " << res->body;
    return nlohmann::json::parse(res->body);
}

httplib::Result post_steer(httplib::Client& cli, const nlohmann::json& cmd) {
    return cli.Post("/steer", cmd.dump(), "application/json");
}

SnapshotPtr fake_snapshot(std::uint64_t seq) {
    auto s = std::make_shared<Snapshot>();
    s->seq = seq;
    s->body = {{"seq", seq}, {"views", nlohmann::json::array()}};
    s->text = s->body.dump();
    return s;
}

/// Collects `data:` events from /stream on a background thread.
class StreamReader {
public:
    StreamReader(int port, std::size_t want) : want_(want) {
        thread_ = std::thread([this, port] {
            httplib::Client cli("127.0.0.1", port);
            cli.set_read_timeout(20, 0);
            cli.Get("/stream", [&](const char* data, std::size_t n) {
                std::lock_guard lock(mu_);
                buffer_.append(data, n);
                for (std::size_t pos; (pos = buffer_.find("\n\n")) != std::string::npos;) {
                    const auto event = buffer_.substr(0, pos);
                    buffer_.erase(0, pos + 2);
                    if (event.rfind("data: ", 0) == 0) events_.push_back(nlohmann::json::parse(event.substr(6)));
                }
                cv_.notify_all();
                return events_.size() < want_;
            });
            std::lock_guard lock(mu_);
            finished_ = true;
            cv_.notify_all();
        });
    }
    ~StreamReader() {
        if (thread_.joinable()) thread_.join();
    }

    std::vector<nlohmann::json> wait() {
        std::unique_lock lock(mu_);
        cv_.wait_for(lock, std::chrono::seconds(20), [&] { return events_.size() >= want_ || finished_; });
        return events_;
    }

private:
    std::size_t want_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::string buffer_;
    std::vector<nlohmann::json> events_;
    bool finished_ = false;
    std::thread thread_;
};

void wait_for_subscribers(SnapshotStore& store, std::size_t n) {
    for (int i = 0; i < 500 && store.subscribers() < n; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    ASSERT_EQ(store.subscribers(), n);
}

}  // namespace

TEST(Envelope, Shape) {
    const auto j = nlohmann::json::parse(envelope("snapshot", 7, R"({"a":1})"));
    EXPECT_EQ(j, nlohmann::json::parse(R"({"type":"snapshot","seq":7,"payload":{"a":1}})"));
    EXPECT_TRUE(nlohmann::json::parse(envelope("error", std::nullopt, "{}"))["seq"].is_null());
}

TEST(Subscription, DropsOldestWithGapMarker) {
    Subscription sub(3);
    for (std::uint64_t i = 0; i < 5; ++i) sub.push(std::make_shared<const std::string>(std::to_string(i)), i);
    const auto gap = nlohmann::json::parse(*sub.pop(std::chrono::milliseconds(1)));
    EXPECT_EQ(gap["type"], "gap");
    EXPECT_EQ(gap["seq"], 2);
    EXPECT_EQ(gap["payload"]["dropped"], 2);
    EXPECT_EQ(*sub.pop(std::chrono::milliseconds(1)), "2");
    EXPECT_EQ(*sub.pop(std::chrono::milliseconds(1)), "3");
    EXPECT_EQ(*sub.pop(std::chrono::milliseconds(1)), "4");
    EXPECT_FALSE(sub.pop(std::chrono::milliseconds(1)));
    sub.close();
    sub.push(std::make_shared<const std::string>("late"), 9);
    EXPECT_FALSE(sub.pop(std::chrono::milliseconds(1)));
}

TEST(SnapshotStore, HistoryAndLatest) {
    SnapshotStore store(3);
    EXPECT_FALSE(store.latest());
    EXPECT_FALSE(store.latest_seq());
    for (std::uint64_t i = 0; i < 5; ++i) store.publish(fake_snapshot(i));
    EXPECT_EQ(store.latest_seq(), 4u);
    EXPECT_FALSE(store.get(1));  // evicted
    ASSERT_TRUE(store.get(2));
    EXPECT_EQ(nlohmann::json::parse(*store.get(2))["seq"], 2);
    EXPECT_FALSE(store.get(5));
    EXPECT_EQ(store.get(4), store.latest());
}

TEST(SnapshotStore, SubscribersSeeOnlyLaterSnapshots) {
    SnapshotStore store;
    store.publish(fake_snapshot(0));
    auto a = store.subscribe();
    store.publish(fake_snapshot(1));
    auto b = store.subscribe();
    store.publish(fake_snapshot(2));
    EXPECT_EQ(nlohmann::json::parse(*a->pop(std::chrono::milliseconds(1)))["seq"], 1);
    EXPECT_EQ(nlohmann::json::parse(*a->pop(std::chrono::milliseconds(1)))["seq"], 2);
    EXPECT_EQ(nlohmann::json::parse(*b->pop(std::chrono::milliseconds(1)))["seq"], 2);
    EXPECT_FALSE(b->pop(std::chrono::milliseconds(1)));
    store.unsubscribe(a);
    EXPECT_EQ(store.subscribers(), 1u);
}

class ServiceTest : public ::testing::Test {
protected:
    void start(const std::string& mode, std::size_t updates) {
        std::string text;
        for (std::size_t i = 0; i < updates; ++i) text += "R,+1,a" + std::to_string(i % 3) + ",0.5\n";
        engine_ = std::make_unique<Engine>(write_figure1(dir_, mode, text));
        service_ = std::make_unique<Service>(*engine_, ServiceOptions{.port = 0});
        port_ = service_->start();
        cli_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    }

    void run_engine(bool linger = false) {
        runner_ = std::thread([this, linger] { engine_->run(service_->publisher(), linger); });
    }

    void TearDown() override {
        if (engine_) engine_->steering().request_stop();
        if (runner_.joinable()) runner_.join();
        if (service_) service_->stop();
    }

    TempDir dir_;
    std::unique_ptr<Engine> engine_;
    std::unique_ptr<Service> service_;
    std::unique_ptr<httplib::Client> cli_;
    std::thread runner_;
    int port_ = 0;
};

TEST_F(ServiceTest, SnapshotEndpoints) {
    start("count", 4);
    auto before = get_json(*cli_, "/snapshot/latest", 404);
    EXPECT_EQ(before["type"], "error");

    run_engine();
    runner_.join();

    const auto latest = get_json(*cli_, "/snapshot/latest");
    EXPECT_EQ(latest["type"], "snapshot");
    EXPECT_EQ(latest["seq"], 2);
    EXPECT_EQ(latest["payload"]["seq"], 2);

    const auto zero = get_json(*cli_, "/snapshot/0");
    EXPECT_EQ(zero["seq"], 0);
    EXPECT_EQ(zero["payload"]["root"]["entries"][0]["value"], 10);

    get_json(*cli_, "/snapshot/3", 404);
    get_json(*cli_, "/snapshot/99999999999999999999999", 404);
    EXPECT_EQ(cli_->Get("/snapshot/abc")->status, 404);

    auto r1 = cli_->Get("/snapshot/1");
    auto r2 = cli_->Get("/snapshot/1");
    EXPECT_EQ(r1->body, r2->body);
    EXPECT_EQ(r1->get_header_value("Content-Type"), "application/json");
}

TEST_F(ServiceTest, ViewTreeCountsFollowLatestSnapshot) {
    start("covar", 2);
    const auto empty = get_json(*cli_, "/viewtree");
    EXPECT_EQ(empty["type"], "viewtree");
    EXPECT_TRUE(empty["seq"].is_null());

    run_engine();
    runner_.join();
    const auto tree = get_json(*cli_, "/viewtree");
    EXPECT_EQ(tree["seq"], 1);
    const auto& nodes = tree["payload"]["nodes"];
    ASSERT_EQ(nodes.size(), 3u);
    EXPECT_EQ(nodes[0]["id"], "Q");
    EXPECT_EQ(nodes[1]["id"], "V_R");
    EXPECT_EQ(nodes[1]["count"], 4);  // a0..a3
    EXPECT_EQ(nodes[2]["sql"], "SELECT A, SUM(g_C(C)*g_D(D)) FROM S GROUP BY A");
    EXPECT_EQ(tree["payload"]["edges"].size(), 2u);
    // Structure matches the engine's own description.
    auto mine = engine_->viewtree();
    for (auto& n : mine["nodes"]) n.erase("count");
    auto served = tree["payload"];
    for (auto& n : served["nodes"]) n.erase("count");
    EXPECT_EQ(served, mine);
}

TEST_F(ServiceTest, SteerAckAndRejection) {
    start("covar", 0);
    auto ok = post_steer(*cli_, {{"type", "set_lambda"}, {"value", 0.25}});
    ASSERT_TRUE(ok);
    EXPECT_EQ(ok->status, 200);
    const auto ack = nlohmann::json::parse(ok->body);
    EXPECT_EQ(ack["type"], "steer_ack");
    EXPECT_EQ(ack["seq"], 0);
    EXPECT_EQ(ack["payload"]["command"]["type"], "set_lambda");

    auto bad = post_steer(*cli_, {{"type", "set_label"}, {"attribute", "A"}});
    EXPECT_EQ(bad->status, 400);
    const auto rej = nlohmann::json::parse(bad->body);
    EXPECT_EQ(rej["type"], "steer_rejected");
    EXPECT_FALSE(rej["payload"]["reason"].get<std::string>().empty());

    EXPECT_EQ(cli_->Post("/steer", "{not json", "application/json")->status, 400);
    EXPECT_EQ(post_steer(*cli_, {{"type", "launch"}})->status, 400);
    EXPECT_EQ(post_steer(*cli_, {{"type", "set_lambda"}, {"value", -2}})->status, 400);

    run_engine();
    runner_.join();
    EXPECT_EQ(get_json(*cli_, "/snapshot/0")["payload"]["steering"]["lambda"], 0.25);
}

TEST_F(ServiceTest, CategoricalLabelRejected) {
    dir_.write("R.csv", "a1,x\n");
    dir_.write("S.csv", "a1,1.0,2.0\n");
    auto j = figure1_config("covar", "");
    j["relations"][0]["attributes"][1] = {{"name", "B"}, {"type", "string"}};
    dir_.write("config.json", j.dump());
    engine_ = std::make_unique<Engine>(load_config(dir_ / "config.json"));
    service_ = std::make_unique<Service>(*engine_, ServiceOptions{.port = 0});
    httplib::Client cli("127.0.0.1", service_->start());
    auto res = post_steer(cli, {{"type", "set_label"}, {"attribute", "B"}});
    EXPECT_EQ(res->status, 400);
    EXPECT_NE(res->body.find("categorical"), std::string::npos);
}

TEST_F(ServiceTest, StreamDeliversEachSnapshotOnceInOrder) {
    start("count", 6);
    engine_->steering().push(steer::Pause{});
    run_engine(true);
    StreamReader a(port_, 4), b(port_, 4);
    wait_for_subscribers(service_->store(), 2);
    // Paused before snapshot 0, so subscribers join at the very start.
    auto resume = post_steer(*cli_, {{"type", "resume"}});
    EXPECT_EQ(nlohmann::json::parse(resume->body)["seq"], 0);
    const auto ea = a.wait();
    const auto eb = b.wait();
    ASSERT_EQ(ea.size(), 4u);
    EXPECT_EQ(ea, eb);
    for (std::size_t i = 0; i < ea.size(); ++i) {
        EXPECT_EQ(ea[i]["type"], "snapshot");
        EXPECT_EQ(ea[i]["seq"], i);
    }
}

TEST_F(ServiceTest, LateSubscriberStartsAfterLatest) {
    start("covar", 2);
    run_engine(true);
    while (service_->store().latest_seq() != std::optional<std::uint64_t>(1))
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    StreamReader reader(port_, 1);
    wait_for_subscribers(service_->store(), 1);
    // Stream exhausted: only steering produces new snapshots now.
    auto ack = nlohmann::json::parse(post_steer(*cli_, {{"type", "set_lambda"}, {"value", 1}})->body);
    EXPECT_EQ(ack["seq"], 2);
    const auto events = reader.wait();
    ASSERT_EQ(events.size(), 1u);
    EXPECT_EQ(events[0]["seq"], 2);
    EXPECT_EQ(events[0]["payload"]["steering"]["lambda"], 1.0);
}

TEST_F(ServiceTest, ThresholdChangeShowsAtAckedSeq) {
    start("mi", 8);
    engine_->steering().push(steer::Pause{});
    run_engine(true);
    auto ack = nlohmann::json::parse(post_steer(*cli_, {{"type", "set_threshold"}, {"value", 0.4}})->body);
    EXPECT_EQ(ack["seq"], 0);
    EXPECT_EQ(post_steer(*cli_, {{"type", "set_label"}, {"attribute", "B"}})->status, 200);
    post_steer(*cli_, {{"type", "resume"}});
    while (service_->store().latest_seq() != std::optional<std::uint64_t>(4))
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    const auto snap = get_json(*cli_, "/snapshot/0");
    EXPECT_EQ(snap["payload"]["analytics"]["threshold"], 0.4);
    ASSERT_EQ(snap["payload"]["analytics"]["ranking"].size(), 2u);
    for (const auto& r : snap["payload"]["analytics"]["ranking"])
        EXPECT_EQ(r["selected"].get<bool>(), r["mi"].get<double>() > 0.4);
}
