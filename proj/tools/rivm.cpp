#include "ringivm/engine.hpp"
#include "ringivm/service.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>

namespace {

volatile std::sig_atomic_t g_interrupted = 0;

void on_signal(int) { g_interrupted = 1; }

struct RunArgs {
    std::string config;
    bool serve = false;
    std::optional<int> port;
    std::string host = "127.0.0.1";
    bool oracle = false;
    bool bench = false;
    std::string output;
    std::optional<int> pause_ms;
    std::optional<std::size_t> batch_size;
};

int run(const RunArgs& args) {
    auto config = rivm::load_config(args.config);
    if (args.serve) config.serve = true;
    if (args.port) config.port = *args.port;
    if (!args.output.empty()) config.output = args.output;
    if (args.pause_ms) config.pause_ms = *args.pause_ms;
    if (args.batch_size) config.batch_size = *args.batch_size;

    if (args.bench) {
        const auto report = rivm::bench(config);
        if (config.output.empty()) {
            std::cout << report.dump(2) << '\n';
        } else {
            std::ofstream out(config.output);
            out << report.dump(2) << '\n';
        }
        return 0;
    }

    rivm::Engine engine(config, {.oracle = args.oracle});
    std::ofstream file;
    if (!config.output.empty()) {
        file.open(config.output);
        if (!file) throw rivm::Error("cannot open output " + config.output);
    }
    std::ostream& out = config.output.empty() ? std::cout : file;
    auto write = rivm::ndjson_writer(out);

    if (!config.serve) {
        engine.run(write);
        return 0;
    }

    rivm::Service service(engine, {.host = args.host, .port = config.port});
    const int port = service.start();
    std::cerr << "serving on http://" << args.host << ':' << port << '\n';

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::atomic<bool> done{false};
    std::thread watcher([&] {
        while (!done && !g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
        engine.steering().request_stop();
    });
    auto publish = service.publisher();
    try {
        engine.run(
            [&](rivm::SnapshotPtr s) {
                write(s);
                publish(std::move(s));
            },
            true);
    } catch (...) {
        done = true;
        watcher.join();
        throw;
    }
    done = true;
    watcher.join();
    service.stop();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ringivm: incremental view maintenance over rings"};
    app.require_subcommand(1);

    RunArgs ra;
    auto* run_cmd = app.add_subcommand("run", "Maintain the views over an update stream and emit snapshots");
    run_cmd->add_option("--config", ra.config, "Engine config JSON")->required()->check(CLI::ExistingFile);
    run_cmd->add_flag("--serve", ra.serve, "Serve snapshots and accept steering over HTTP");
    run_cmd->add_option("--port", ra.port, "HTTP port (0 picks a free one)");
    run_cmd->add_option("--host", ra.host, "HTTP bind address");
    run_cmd->add_flag("--oracle", ra.oracle, "Recompute every view from scratch per batch");
    run_cmd->add_flag("--bench", ra.bench, "Compare incremental and recompute throughput");
    run_cmd->add_option("--output", ra.output, "Write snapshots (NDJSON) or the bench report here");
    run_cmd->add_option("--pause-ms", ra.pause_ms, "Pause between batches");
    run_cmd->add_option("--batch-size", ra.batch_size, "Updates per batch")->check(CLI::PositiveNumber);

    rivm::WorkloadOptions wo;
    std::string out_dir = "workload";
    std::string mode = "covar";
    auto* gen_cmd = app.add_subcommand("gen", "Generate a star-schema workload with an update stream");
    gen_cmd->add_option("--seed", wo.seed, "Random seed");
    gen_cmd->add_option("--tuples", wo.tuples, "Tuples in the initial load");
    gen_cmd->add_option("--relations", wo.relations, "Relations: one fact plus dimensions")->check(CLI::Range(2, 64));
    gen_cmd->add_option("--delete-frac", wo.delete_fraction, "Fraction of updates that delete")
        ->check(CLI::Range(0.0, 1.0));
    gen_cmd->add_option("--updates", wo.updates, "Updates in the stream (default tuples/2)");
    gen_cmd->add_option("--skew", wo.skew, "Fact key skew; 1 is uniform");
    gen_cmd->add_option("--mode", mode, "Aggregate mode")->check(CLI::IsMember({"covar", "mi", "count"}));
    gen_cmd->add_option("--batch-size", wo.batch_size, "batch_size written to the config");
    gen_cmd->add_option("--out", out_dir, "Output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) return run(ra);
        wo.mode = rivm::mode_from_string(mode);
        std::cout << rivm::gen_workload(wo, out_dir).string() << '\n';
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
