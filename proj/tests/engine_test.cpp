#include "ringivm/engine.hpp"
#include "engine_support.hpp"

#include <gtest/gtest.h>

#include <map>
#include <set>
#include <sstream>
#include <thread>

using namespace rivm;
using namespace rivm::testing;

namespace {

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) out.push_back(line);
    return out;
}

std::vector<std::string> fields_of(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    for (std::string f; std::getline(in, f, ',');) out.push_back(f);
    return out;
}

std::string updates_text(std::size_t n) {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        out += i % 3 == 2 ? "S,+1,a" + std::to_string(i % 4) + ",1.5,2.5\n" : "R,+1,a" + std::to_string(i % 4) + ",0.5\n";
    }
    return out;
}

std::int64_t root_count(const Snapshot& s) {
    const auto& entries = s.body.at("root").at("entries");
    return entries.empty() ? 0 : entries[0].at("value").get<std::int64_t>();
}

}  // namespace

TEST(Config, Defaults) {
    auto c = parse_config(figure1_config("count"), "/base");
    EXPECT_EQ(c.mode, Mode::Count);
    EXPECT_EQ(c.relations.size(), 2u);
    EXPECT_EQ(c.relations[0].attributes[0].kind, AttrKind::Categorical);
    EXPECT_EQ(c.relations[0].attributes[1].kind, AttrKind::Continuous);
    EXPECT_EQ(c.bins, 16);
    EXPECT_EQ(c.effective_pause_ms(), 0);
    c.serve = true;
    EXPECT_EQ(c.effective_pause_ms(), 1000);
    c.pause_ms = 5;
    EXPECT_EQ(c.effective_pause_ms(), 5);
    EXPECT_EQ(c.resolve("R.csv"), std::filesystem::path("/base/R.csv"));
    EXPECT_EQ(c.resolve("/abs/R.csv"), std::filesystem::path("/abs/R.csv"));

    auto j = figure1_config("covar");
    j.erase("batch_size");
    EXPECT_EQ(parse_config(j, {}).batch_size, 10000u);
}

TEST(Config, RoundTrip) {
    auto j = figure1_config("mi");
    j["label"] = "B";
    j["mi_threshold"] = 0.25;
    j["bins"] = 4;
    const auto c = parse_config(j, {});
    const auto back = parse_config(config_to_json(c), {});
    EXPECT_EQ(config_to_json(back), config_to_json(c));
    EXPECT_EQ(back.label, std::optional<std::string>("B"));
    EXPECT_EQ(back.bins, 4);
}

TEST(Config, Rejections) {
    auto bad = [](auto mutate) {
        auto j = figure1_config("covar");
        mutate(j);
        EXPECT_THROW(parse_config(j, {}), ValidationError) << j.dump();
    };
    bad([](auto& j) { j["mode"] = "sum"; });
    bad([](auto& j) { j["batch_size"] = 0; });
    bad([](auto& j) { j["lambda"] = -1; });
    bad([](auto& j) { j["bins"] = 0; });
    bad([](auto& j) { j["relations"][0]["attributes"][0]["kind"] = "continuous"; });
    bad([](auto& j) { j["relations"][0]["attributes"][0]["type"] = "bool"; });
    bad([](auto& j) { j["relations"] = nlohmann::json::array(); });
    bad([](auto& j) { j.erase("tree"); });
    bad([](auto& j) { j["pause_ms"] = -3; });
    EXPECT_THROW(load_config("/nonexistent/config.json"), ValidationError);
}

TEST(Steering, JsonRoundTrip) {
    const std::vector<SteerCommand> cmds{steer::SetLabel{"B"}, steer::SetThreshold{0.4},
                                         steer::SetFeatures{{"C", "D"}}, steer::SetLambda{2},
                                         steer::Pause{}, steer::Resume{}};
    for (const auto& c : cmds) EXPECT_EQ(steer_to_json(steer_from_json(steer_to_json(c))), steer_to_json(c));
    EXPECT_THROW(steer_from_json({{"type", "explode"}}), ValidationError);
    EXPECT_THROW(steer_from_json({{"type", "set_label"}}), ValidationError);
    EXPECT_THROW(steer_from_json({{"type", "set_threshold"}, {"value", "high"}}), ValidationError);
    EXPECT_THROW(steer_from_json(nlohmann::json::array()), ValidationError);
}

TEST(Steering, AckNamesFirstReflectingSnapshot) {
    SteerQueue q;
    SteeringState st;
    EXPECT_EQ(q.push(steer::SetThreshold{0.1}), 0u);
    EXPECT_TRUE(q.drain_into(st, 0));
    EXPECT_EQ(st.threshold, 0.1);
    EXPECT_EQ(q.push(steer::SetThreshold{0.2}), 1u);
    EXPECT_EQ(q.push(steer::Pause{}), 1u);
    EXPECT_FALSE(q.drain_into(st, 1));
    EXPECT_TRUE(st.paused);
    // Still unsealed: a command sent while paused lands in the same snapshot.
    EXPECT_EQ(q.push(steer::Resume{}), 1u);
    EXPECT_TRUE(q.drain_into(st, 1));
    EXPECT_EQ(st.threshold, 0.2);
    EXPECT_EQ(q.push(steer::SetLambda{1}), 2u);
}

TEST(Steering, SleepAndWaitObserveStop) {
    SteerQueue q;
    EXPECT_TRUE(q.sleep(std::chrono::milliseconds(1)));
    EXPECT_FALSE(q.wait(std::chrono::milliseconds(1)));
    q.push(steer::Pause{});
    EXPECT_TRUE(q.wait(std::chrono::milliseconds(1)));
    std::thread t([&] {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        q.request_stop();
    });
    const auto t0 = std::chrono::steady_clock::now();
    EXPECT_FALSE(q.sleep(std::chrono::seconds(30)));
    EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::seconds(10));
    t.join();
    EXPECT_TRUE(q.stop_requested());
}

TEST(Engine, EmptyStreamEmitsOnlySnapshotZero) {
    TempDir dir;
    Engine e(write_figure1(dir, "count", ""));
    auto snaps = run_all(e);
    ASSERT_EQ(snaps.size(), 1u);
    EXPECT_EQ(snaps[0]->seq, 0u);
    EXPECT_EQ(snaps[0]->body["batches"], 0);

    Engine oracle(write_figure1(dir, "count", ""), {.oracle = true});
    auto osnaps = run_all(oracle);
    ASSERT_EQ(osnaps.size(), 1u);
    EXPECT_EQ(osnaps[0]->body["root"], snaps[0]->body["root"]);
}

TEST(Engine, CommentOnlyStreamIsEmpty) {
    TempDir dir;
    Engine e(write_figure1(dir, "count", "# nothing\n\n"));
    EXPECT_EQ(run_all(e).size(), 1u);
}

TEST(Engine, SnapshotCountIsCeilNOverBPlusOne) {
    for (std::size_t n : {1u, 2u, 5u, 6u, 17u})
        for (std::size_t b : {1u, 2u, 4u, 100u}) {
            TempDir dir;
            auto cfg = write_figure1(dir, "count", updates_text(n));
            cfg.batch_size = b;
            Engine e(cfg);
            auto snaps = run_all(e);
            EXPECT_EQ(snaps.size(), (n + b - 1) / b + 1) << "n=" << n << " b=" << b;
            for (std::size_t i = 0; i < snaps.size(); ++i) EXPECT_EQ(snaps[i]->seq, i);
            EXPECT_EQ(snaps.back()->body["updates"], n);
        }
}

TEST(Engine, Figure1CountIsJoinCardinality) {
    TempDir dir;
    Engine e(write_figure1(dir, "count", ""));
    auto snaps = run_all(e);

    std::int64_t want = 0;
    for (const auto& r : lines_of(read_file(dir / "R.csv")))
        for (const auto& s : lines_of(read_file(dir / "S.csv")))
            if (fields_of(r)[0] == fields_of(s)[0]) ++want;
    EXPECT_EQ(want, 10);
    EXPECT_EQ(root_count(*snaps[0]), want);
    EXPECT_EQ(snaps[0]->body["analytics"]["count"], want);
}

TEST(Engine, CountTracksInsertsAndDeletes) {
    TempDir dir;
    // a3 joins nothing in S until the S insert; the R delete removes an a1 match.
    Engine e(write_figure1(dir, "count", "S,+1,a3,0.0,0.0\nR,-1,a1,1.0\nR,+2,a9,1.0\n"));
    auto snaps = run_all(e);
    ASSERT_EQ(snaps.size(), 3u);
    EXPECT_EQ(root_count(*snaps[0]), 10);
    EXPECT_EQ(root_count(*snaps[1]), 10);  // +1 (a3) - 1 (a1)
    EXPECT_EQ(root_count(*snaps[2]), 10);
}

TEST(Engine, ErrorNamesTheBatch) {
    TempDir dir;
    Engine e(write_figure1(dir, "count", "R,+1,a1,1.0\nR,+1,a1,2.0\nR,+1,a1\n"));
    try {
        run_all(e);
        FAIL() << "expected an error";
    } catch (const Error& err) {
        EXPECT_NE(std::string(err.what()).find("batch 2"), std::string::npos) << err.what();
    }
}

TEST(Engine, DeleteOfAbsentTupleIsAccepted) {
    TempDir dir;
    // Negative multiplicities are legal; zz joins nothing so the count is unchanged.
    Engine e(write_figure1(dir, "count", "R,-1,zz,1.0\nS,-1,a1,1.0,5.0\n"));
    auto snaps = run_all(e);
    ASSERT_EQ(snaps.size(), 2u);
    EXPECT_EQ(root_count(*snaps[1]), 8);
}

TEST(Engine, ValidateSteering) {
    TempDir dir;
    Engine covar(write_figure1(dir, "covar", ""));
    EXPECT_FALSE(covar.validate(steer::SetLabel{"B"}));
    auto why = covar.validate(steer::SetLabel{"A"});
    ASSERT_TRUE(why);  // A is a join key, not tracked
    EXPECT_NE(why->find("A"), std::string::npos);
    EXPECT_TRUE(covar.validate(steer::SetFeatures{{"C", "nope"}}));
    EXPECT_TRUE(covar.validate(steer::SetFeatures{{"C", "C"}}));
    EXPECT_FALSE(covar.validate(steer::SetFeatures{{"C", "D"}}));
    EXPECT_TRUE(covar.validate(steer::SetLambda{-1}));
    EXPECT_TRUE(covar.validate(steer::SetLambda{std::nan("")}));
    EXPECT_FALSE(covar.validate(steer::SetThreshold{0.4}));
    EXPECT_FALSE(covar.validate(steer::Pause{}));

    Engine count(write_figure1(dir, "count", ""));
    EXPECT_TRUE(count.validate(steer::SetLabel{"B"}));
}

TEST(Engine, CategoricalLabelRejectedInCovarMode) {
    TempDir dir;
    dir.write("R.csv", "a1,x\n");
    dir.write("S.csv", "a1,1.0,2.0\n");
    auto j = figure1_config("covar", "");
    j["relations"][0]["attributes"][1] = {{"name", "B"}, {"type", "string"}};
    dir.write("config.json", j.dump());
    Engine e(load_config(dir / "config.json"));
    auto why = e.validate(steer::SetLabel{"B"});
    ASSERT_TRUE(why);
    EXPECT_NE(why->find("categorical"), std::string::npos);

    j["label"] = "B";
    dir.write("config.json", j.dump());
    EXPECT_THROW(Engine(load_config(dir / "config.json")), ValidationError);
}

TEST(Engine, CovarSnapshotHasModel) {
    TempDir dir;
    Engine e(write_figure1(dir, "covar", updates_text(7)));
    auto snaps = run_all(e);
    for (const auto& s : snaps) {
        const auto& a = s->body.at("analytics");
        ASSERT_TRUE(a.contains("model")) << a.dump();
        EXPECT_TRUE(a["model"]["converged"].get<bool>());
        EXPECT_LE(a["model"]["gradient_norm"].get<double>(), a["model"]["tolerance"].get<double>());
        EXPECT_EQ(a["label"], "D");  // last continuous tracked attribute
        EXPECT_EQ(a["features"], nlohmann::json::parse(R"j(["(intercept)", "B", "C"])j"));
    }
    const auto& t = snaps.back()->body.at("timing");
    EXPECT_GE(t["propagate_ms"].get<double>(), 0.0);
    EXPECT_GT(t["throughput"].get<double>(), 0.0);
}

TEST(Engine, MiSnapshotHasSelectionAndTree) {
    TempDir dir;
    auto cfg = write_figure1(dir, "mi", updates_text(5));
    cfg.label = "B";
    cfg.bins = 3;
    cfg.mi_threshold = 0.01;
    Engine e(cfg);
    ASSERT_EQ(e.bins().size(), 3u);
    for (const auto& t : e.tracked()) {
        EXPECT_EQ(t.kind, AttrKind::Categorical);
        EXPECT_TRUE(t.binned);
    }
    auto snaps = run_all(e);
    const auto& a = snaps.back()->body.at("analytics");
    EXPECT_EQ(a["attributes"], nlohmann::json::parse(R"(["B", "C", "D"])"));
    EXPECT_EQ(a["ranking"].size(), 2u);
    EXPECT_EQ(a["chow_liu"]["edges"].size(), 2u);
    EXPECT_EQ(a["bins"]["B"]["k"], 3);
    // Bin edges are frozen at the initial load.
    EXPECT_EQ(snaps.front()->body["analytics"]["bins"], a["bins"]);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_GE(a["matrix"][i][i].get<double>(), 0.0);
}

TEST(Engine, SteeringBeforeRunShowsInSnapshotZero) {
    TempDir dir;
    Engine e(write_figure1(dir, "covar", updates_text(3)));
    EXPECT_EQ(e.steering().push(steer::SetLambda{0.5}), 0u);
    EXPECT_EQ(e.steering().push(steer::SetFeatures{{"C"}}), 0u);
    auto snaps = run_all(e);
    EXPECT_EQ(snaps[0]->body["steering"]["lambda"], 0.5);
    EXPECT_EQ(snaps[0]->body["analytics"]["model"]["lambda"], 0.5);
    EXPECT_EQ(snaps[0]->body["analytics"]["features"], nlohmann::json::parse(R"j(["(intercept)", "C"])j"));
}

TEST(Engine, SteeringMidRunTakesEffectAtAckedSeq) {
    TempDir dir;
    Engine e(write_figure1(dir, "mi", updates_text(12)));
    std::vector<SnapshotPtr> snaps;
    std::map<std::uint64_t, double> acked;
    e.run([&](SnapshotPtr s) {
        snaps.push_back(s);
        if (s->seq == 2) acked[e.steering().push(steer::SetThreshold{0.4})] = 0.4;
        if (s->seq == 4) acked[e.steering().push(steer::SetThreshold{0.7})] = 0.7;
    });
    ASSERT_EQ(acked.size(), 2u);
    EXPECT_EQ(acked.begin()->first, 3u);
    EXPECT_EQ(std::next(acked.begin())->first, 5u);
    for (const auto& s : snaps) {
        const double want = s->seq < 3 ? 0.0 : s->seq < 5 ? 0.4 : 0.7;
        EXPECT_EQ(s->body["steering"]["threshold"], want) << s->seq;
        EXPECT_EQ(s->body["analytics"]["threshold"], want) << s->seq;
    }
}

TEST(Engine, SteeringNeverChangesViews) {
    TempDir dir;
    auto cfg = write_figure1(dir, "covar", updates_text(9));
    Engine plain(cfg);
    auto a = run_all(plain);
    Engine steered(cfg);
    std::vector<SnapshotPtr> b;
    steered.run([&](SnapshotPtr s) {
        b.push_back(s);
        steered.steering().push(steer::SetLambda{static_cast<double>(s->seq)});
        steered.steering().push(steer::SetFeatures{{"B"}});
    });
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i]->body["root"].dump(), b[i]->body["root"].dump());
        EXPECT_EQ(a[i]->body["views"], b[i]->body["views"]);
    }
}

TEST(Engine, PauseHaltsEmissionUntilResume) {
    TempDir dir;
    Engine e(write_figure1(dir, "count", updates_text(8)));
    std::atomic<std::size_t> emitted{0};
    std::size_t during_pause = 0;
    std::uint64_t resume_ack = 0;
    std::thread resumer;
    e.run([&](SnapshotPtr s) {
        ++emitted;
        if (s->seq == 1) {
            EXPECT_EQ(e.steering().push(steer::Pause{}), 2u);
            resumer = std::thread([&] {
                std::this_thread::sleep_for(std::chrono::milliseconds(300));
                during_pause = emitted;
                resume_ack = e.steering().push(steer::Resume{});
            });
        }
    });
    resumer.join();
    EXPECT_EQ(during_pause, 2u);
    EXPECT_EQ(resume_ack, 2u);
    EXPECT_EQ(emitted, 5u);
}

TEST(Engine, StopWhilePausedEndsRun) {
    TempDir dir;
    Engine e(write_figure1(dir, "count", updates_text(8)));
    e.steering().push(steer::Pause{});
    std::thread stopper([&] {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
        e.steering().request_stop();
    });
    auto snaps = run_all(e);
    stopper.join();
    EXPECT_TRUE(snaps.empty());
}

TEST(Engine, LingerAnswersSteeringAfterStreamEnds) {
    TempDir dir;
    Engine e(write_figure1(dir, "covar", updates_text(2)));
    std::vector<SnapshotPtr> snaps;
    std::thread driver;
    e.run(
        [&](SnapshotPtr s) {
            snaps.push_back(s);
            if (s->seq == 1)
                driver = std::thread([&] {
                    std::this_thread::sleep_for(std::chrono::milliseconds(50));
                    EXPECT_EQ(e.steering().push(steer::SetLambda{3}), 2u);
                });
            if (s->seq == 2) e.steering().request_stop();
        },
        true);
    driver.join();
    ASSERT_EQ(snaps.size(), 3u);
    EXPECT_EQ(snaps[2]->body["steering"]["lambda"], 3.0);
    EXPECT_EQ(snaps[2]->body["batches"], 1);
    EXPECT_EQ(snaps[2]->body["root"], snaps[1]->body["root"]);
}

TEST(Engine, IncrementalMatchesOracleOnGeneratedWorkloads) {
    for (auto mode : {Mode::Count, Mode::Covar, Mode::MI})
        for (std::uint64_t seed : {1u, 2u}) {
            TempDir dir;
            WorkloadOptions w;
            w.seed = seed;
            w.tuples = 600;
            w.relations = 3;
            w.updates = 400;
            w.batch_size = 40;
            w.mode = mode;
            const auto cfg = load_config(gen_workload(w, dir.path()));
            Engine inc(cfg), orc(cfg, {.oracle = true});
            auto a = run_all(inc);
            auto b = run_all(orc);
            ASSERT_EQ(a.size(), 11u);
            ASSERT_EQ(a.size(), b.size());
            for (std::size_t i = 0; i < a.size(); ++i) {
                if (mode == Mode::Count)
                    EXPECT_EQ(a[i]->body["root"].dump(), b[i]->body["root"].dump()) << i;
                else
                    EXPECT_TRUE(json_close(a[i]->body["root"], b[i]->body["root"])) << to_string(mode) << " " << i;
                EXPECT_EQ(a[i]->body["views"], b[i]->body["views"]);
            }
        }
}

TEST(Engine, NdjsonWriterEmitsOneLinePerSnapshot) {
    TempDir dir;
    Engine e(write_figure1(dir, "count", updates_text(5)));
    std::ostringstream out;
    e.run(ndjson_writer(out));
    const auto lines = lines_of(out.str());
    ASSERT_EQ(lines.size(), 4u);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto j = nlohmann::json::parse(lines[i]);
        EXPECT_EQ(j["seq"], i);
        for (const char* k : {"batches", "updates", "mode", "root", "steering", "analytics", "timing", "views"})
            EXPECT_TRUE(j.contains(k)) << k;
    }
}

TEST(Bench, TinyInputReportRoundTrips) {
    TempDir dir;
    auto cfg = write_figure1(dir, "count", updates_text(20));
    const auto report = bench(cfg);
    EXPECT_EQ(nlohmann::json::parse(report.dump()), report);
    EXPECT_GT(report["incremental"]["throughput"].get<double>(), 0.0);
    EXPECT_GT(report["oracle"]["throughput"].get<double>(), 0.0);
    EXPECT_EQ(report["updates"], 20);
    EXPECT_EQ(report["batches"], 10);
    EXPECT_TRUE(report["roots_equal"].get<bool>());
}

TEST(Workload, SameSeedSameBytes) {
    TempDir a, b, c;
    WorkloadOptions w;
    w.tuples = 500;
    w.relations = 4;
    gen_workload(w, a.path());
    gen_workload(w, b.path());
    w.seed = 2;
    gen_workload(w, c.path());
    for (const char* f : {"F.csv", "D1.csv", "D3.csv", "updates.csv", "config.json"})
        EXPECT_EQ(read_file(a / f), read_file(b / f)) << f;
    EXPECT_NE(read_file(a / "updates.csv"), read_file(c / "updates.csv"));
}

TEST(Workload, ZeroDeleteFractionOnlyInserts) {
    TempDir dir;
    WorkloadOptions w;
    w.tuples = 300;
    w.delete_fraction = 0;
    gen_workload(w, dir.path());
    const auto lines = lines_of(read_file(dir / "updates.csv"));
    EXPECT_EQ(lines.size(), 150u);
    for (const auto& l : lines) EXPECT_EQ(fields_of(l)[1], "+1") << l;
}

TEST(Workload, DeletesTargetLiveTuples) {
    for (double frac : {0.2, 0.5, 0.9}) {
        TempDir dir;
        WorkloadOptions w;
        w.tuples = 400;
        w.updates = 1000;
        w.delete_fraction = frac;
        gen_workload(w, dir.path());
        std::map<std::string, std::multiset<std::string>> live;
        for (const char* r : {"F", "D1", "D2"})
            for (const auto& l : lines_of(read_file(dir / (std::string(r) + ".csv")))) live[r].insert(l);
        std::size_t deletes = 0;
        for (const auto& l : lines_of(read_file(dir / "updates.csv"))) {
            const auto f = fields_of(l);
            const auto tuple = l.substr(f[0].size() + f[1].size() + 2);
            if (f[1] == "-1") {
                ++deletes;
                auto it = live[f[0]].find(tuple);
                ASSERT_NE(it, live[f[0]].end()) << l;
                live[f[0]].erase(it);
            } else {
                ASSERT_EQ(f[1], "+1");
                live[f[0]].insert(tuple);
            }
        }
        EXPECT_GT(deletes, 0u);
    }
}

TEST(Workload, GeneratedDatabaseValidates) {
    for (std::size_t rels : {2u, 3u, 5u})
        for (auto mode : {Mode::Count, Mode::Covar, Mode::MI}) {
            TempDir dir;
            WorkloadOptions w;
            w.tuples = 200;
            w.relations = rels;
            w.mode = mode;
            const auto cfg = load_config(gen_workload(w, dir.path()));
            EXPECT_EQ(cfg.relations.size(), rels);
            Engine e(cfg);
            const auto tree = e.viewtree();
            EXPECT_EQ(tree["nodes"].size(), rels + 1);
            std::size_t loaded = 0;
            for (std::size_t i = 1; i < tree["nodes"].size(); ++i) loaded += tree["nodes"][i]["count"].get<std::size_t>();
            EXPECT_GT(loaded, 0u);
        }
}

TEST(Workload, SkewConcentratesFactKeys) {
    auto top_share = [](double skew) {
        TempDir dir;
        WorkloadOptions w;
        w.tuples = 4000;
        w.relations = 2;
        w.skew = skew;
        gen_workload(w, dir.path());
        std::size_t low = 0, total = 0;
        for (const auto& l : lines_of(read_file(dir / "F.csv"))) {
            ++total;
            if (std::stoi(fields_of(l)[0]) < 100) ++low;
        }
        return static_cast<double>(low) / total;
    };
    EXPECT_GT(top_share(4.0), 2 * top_share(1.0));
}

TEST(Workload, RejectsBadOptions) {
    TempDir dir;
    WorkloadOptions w;
    w.relations = 1;
    EXPECT_THROW(gen_workload(w, dir.path()), ValidationError);
    w = {};
    w.delete_fraction = 1.5;
    EXPECT_THROW(gen_workload(w, dir.path()), ValidationError);
    w = {};
    w.skew = 0;
    EXPECT_THROW(gen_workload(w, dir.path()), ValidationError);
}
