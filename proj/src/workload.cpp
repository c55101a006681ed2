#include "ringivm/engine.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

namespace rivm {

namespace {

// Raw engine output is portable across standard libraries; distributions are not.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }
    double normal() {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

private:
    std::mt19937_64 gen_;
};

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return buf;
}

using Row = std::vector<std::string>;

std::string join(const Row& row) {
    std::string out;
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        out += row[i];
    }
    return out;
}

struct Generator {
    const WorkloadOptions& opt;
    Rng rng;
    std::size_t dims;
    std::size_t domain;
    std::vector<std::vector<double>> effect;  // per dimension, per key

    Generator(const WorkloadOptions& o, std::size_t dim_count, std::size_t key_domain)
        : opt(o), rng(o.seed), dims(dim_count), domain(key_domain) {
        for (std::size_t d = 0; d < dims; ++d) {
            effect.emplace_back();
            for (std::size_t k = 0; k < domain; ++k) effect.back().push_back(rng.normal());
        }
    }

    std::size_t fact_key() {
        return std::min(domain - 1, static_cast<std::size_t>(std::pow(rng.uniform(), opt.skew) * domain));
    }

    Row fact() {
        Row row;
        double x = 1.0;
        for (std::size_t d = 0; d < dims; ++d) {
            const auto k = fact_key();
            row.push_back(std::to_string(k));
            x += 0.5 * effect[d][k];
        }
        row.push_back(fmt(x + 0.1 * rng.normal()));
        return row;
    }

    Row dimension(std::size_t d, std::size_t key) {
        const double y = effect[d][key] + 0.05 * rng.normal();
        return {std::to_string(key), fmt(y), "z" + std::to_string(rng.below(4))};
    }
};

}  // namespace

std::filesystem::path gen_workload(const WorkloadOptions& opt, const std::filesystem::path& dir) {
    if (opt.relations < 2) throw ValidationError("a workload needs at least 2 relations");
    if (opt.tuples < 2 * opt.relations) throw ValidationError("too few tuples for the number of relations");
    if (!(opt.delete_fraction >= 0 && opt.delete_fraction <= 1))
        throw ValidationError("delete fraction must be in [0, 1]");
    if (!(opt.skew > 0)) throw ValidationError("skew must be positive");
    if (opt.batch_size == 0) throw ValidationError("batch size must be positive");

    const std::size_t dims = opt.relations - 1;
    const std::size_t domain = std::max<std::size_t>(1, opt.tuples / (4 * dims));
    const std::size_t fact_tuples = opt.tuples - dims * domain;
    Generator g(opt, dims, domain);

    std::filesystem::create_directories(dir);
    // live[0] is the fact relation, live[d + 1] dimension d.
    std::vector<std::vector<Row>> live(opt.relations);
    for (std::size_t d = 0; d < dims; ++d)
        for (std::size_t k = 0; k < domain; ++k) live[d + 1].push_back(g.dimension(d, k));
    for (std::size_t i = 0; i < fact_tuples; ++i) live[0].push_back(g.fact());

    auto relation_name = [](std::size_t r) { return r == 0 ? std::string("F") : "D" + std::to_string(r); };
    for (std::size_t r = 0; r < opt.relations; ++r) {
        std::ofstream out(dir / (relation_name(r) + ".csv"));
        for (const auto& row : live[r]) out << join(row) << '\n';
        if (!out) throw Error("cannot write " + (dir / (relation_name(r) + ".csv")).string());
    }

    const std::size_t updates = opt.updates ? opt.updates : opt.tuples / 2;
    {
        std::ofstream out(dir / "updates.csv");
        for (std::size_t u = 0; u < updates; ++u) {
            // Fact updates dominate, as in a star schema.
            const std::size_t r = g.rng.uniform() < 0.8 ? 0 : 1 + g.rng.below(dims);
            auto& rows = live[r];
            if (!rows.empty() && g.rng.uniform() < opt.delete_fraction) {
                const std::size_t i = g.rng.below(rows.size());
                out << relation_name(r) << ",-1," << join(rows[i]) << '\n';
                rows[i] = std::move(rows.back());
                rows.pop_back();
            } else {
                Row row = r == 0 ? g.fact() : g.dimension(r - 1, g.rng.below(domain));
                out << relation_name(r) << ",+1," << join(row) << '\n';
                rows.push_back(std::move(row));
            }
        }
        if (!out) throw Error("cannot write " + (dir / "updates.csv").string());
    }

    nlohmann::json relations = nlohmann::json::array();
    nlohmann::json fact_attrs = nlohmann::json::array();
    std::vector<std::string> keys;
    for (std::size_t d = 1; d <= dims; ++d) {
        keys.push_back("K" + std::to_string(d));
        fact_attrs.push_back({{"name", keys.back()}, {"type", "int"}});
    }
    fact_attrs.push_back({{"name", "X"}, {"type", "float"}});
    relations.push_back({{"name", "F"}, {"csv", "F.csv"}, {"attributes", std::move(fact_attrs)}});
    nlohmann::json children = nlohmann::json::array();
    children.push_back({{"id", "V_F"}, {"key", keys}, {"relation", "F"}});
    for (std::size_t d = 1; d <= dims; ++d) {
        const auto s = std::to_string(d);
        relations.push_back({{"name", "D" + s},
                             {"csv", "D" + s + ".csv"},
                             {"attributes",
                              {{{"name", "K" + s}, {"type", "int"}},
                               {{"name", "Y" + s}, {"type", "float"}},
                               {{"name", "Z" + s}, {"type", "string"}}}}});
        children.push_back({{"id", "V_D" + s}, {"key", {"K" + s}}, {"relation", "D" + s}});
    }

    nlohmann::json config{{"relations", std::move(relations)},
                          {"mode", to_string(opt.mode)},
                          {"tree", {{"id", "V_root"}, {"key", nlohmann::json::array()}, {"children", std::move(children)}}},
                          {"updates", "updates.csv"},
                          {"batch_size", opt.batch_size}};
    if (opt.mode != Mode::Count) config["label"] = "X";

    const auto path = dir / "config.json";
    std::ofstream out(path);
    out << config.dump(2) << '\n';
    if (!out) throw Error("cannot write " + path.string());
    return path;
}

}  // namespace rivm
