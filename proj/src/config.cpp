#include "ringivm/config.hpp"

#include <fstream>

namespace rivm {

std::string to_string(Mode m) {
    switch (m) {
        case Mode::Covar: return "covar";
        case Mode::MI: return "mi";
        case Mode::Count: return "count";
    }
    return {};
}

Mode mode_from_string(const std::string& s) {
    if (s == "covar") return Mode::Covar;
    if (s == "mi") return Mode::MI;
    if (s == "count") return Mode::Count;
    throw ValidationError("unknown mode '" + s + "' (expected covar, mi or count)");
}

namespace {

ValueType type_from_string(const std::string& s) {
    if (s == "int") return ValueType::Int;
    if (s == "float") return ValueType::Float;
    if (s == "string") return ValueType::String;
    throw ValidationError("unknown attribute type '" + s + "' (expected int, float or string)");
}

std::string type_name(ValueType t) {
    switch (t) {
        case ValueType::Int: return "int";
        case ValueType::Float: return "float";
        case ValueType::String: return "string";
    }
    return {};
}

AttrKind kind_from_string(const std::string& s) {
    if (s == "continuous") return AttrKind::Continuous;
    if (s == "categorical") return AttrKind::Categorical;
    throw ValidationError("unknown attribute kind '" + s + "' (expected continuous or categorical)");
}

}  // namespace

std::filesystem::path EngineConfig::resolve(const std::string& path) const {
    std::filesystem::path p(path);
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

EngineConfig parse_config(const nlohmann::json& j, std::filesystem::path base_dir) {
    EngineConfig c;
    c.base_dir = std::move(base_dir);
    try {
        if (!j.is_object()) throw ValidationError("config must be a JSON object");
        for (const auto& r : j.at("relations")) {
            RelationConfig rel;
            rel.name = r.at("name").get<std::string>();
            rel.csv = r.value("csv", std::string{});
            for (const auto& a : r.at("attributes")) {
                AttributeConfig attr;
                attr.name = a.at("name").get<std::string>();
                attr.type = type_from_string(a.value("type", std::string("int")));
                attr.kind = a.contains("kind") ? kind_from_string(a.at("kind").get<std::string>())
                                               : (attr.type == ValueType::Float ? AttrKind::Continuous
                                                                                : AttrKind::Categorical);
                if (attr.type == ValueType::String && attr.kind == AttrKind::Continuous)
                    throw ValidationError("string attribute " + attr.name + " cannot be continuous");
                rel.attributes.push_back(std::move(attr));
            }
            if (rel.attributes.empty()) throw ValidationError("relation " + rel.name + " has no attributes");
            c.relations.push_back(std::move(rel));
        }
        if (c.relations.empty()) throw ValidationError("config declares no relations");
        c.mode = mode_from_string(j.value("mode", std::string("covar")));
        c.tree = tree_config_from_json(j.at("tree"));
        c.updates = j.value("updates", std::string{});
        const auto batch = j.value("batch_size", std::int64_t{10000});
        if (batch <= 0) throw ValidationError("batch_size must be positive");
        c.batch_size = static_cast<std::size_t>(batch);
        if (j.contains("pause_ms")) {
            c.pause_ms = j.at("pause_ms").get<int>();
            if (*c.pause_ms < 0) throw ValidationError("pause_ms must be non-negative");
        }
        if (j.contains("label") && !j.at("label").is_null()) c.label = j.at("label").get<std::string>();
        c.features = j.value("features", std::vector<std::string>{});
        c.mi_threshold = j.value("mi_threshold", 0.0);
        c.lambda = j.value("lambda", 0.0);
        if (c.lambda < 0) throw ValidationError("lambda must be non-negative");
        c.bins = j.value("bins", 16);
        if (c.bins < 1) throw ValidationError("bins must be positive");
        c.output = j.value("output", std::string{});
        c.serve = j.value("serve", false);
        c.port = j.value("port", 8080);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    return c;
}

EngineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return parse_config(j, path.parent_path());
}

nlohmann::json config_to_json(const EngineConfig& c) {
    nlohmann::json j;
    j["relations"] = nlohmann::json::array();
    for (const auto& r : c.relations) {
        nlohmann::json rel{{"name", r.name}, {"csv", r.csv}, {"attributes", nlohmann::json::array()}};
        for (const auto& a : r.attributes)
            rel["attributes"].push_back({{"name", a.name},
                                         {"type", type_name(a.type)},
                                         {"kind", a.kind == AttrKind::Continuous ? "continuous" : "categorical"}});
        j["relations"].push_back(std::move(rel));
    }
    j["mode"] = to_string(c.mode);
    j["tree"] = tree_config_to_json(c.tree);
    j["updates"] = c.updates;
    j["batch_size"] = c.batch_size;
    if (c.pause_ms) j["pause_ms"] = *c.pause_ms;
    if (c.label) j["label"] = *c.label;
    if (!c.features.empty()) j["features"] = c.features;
    j["mi_threshold"] = c.mi_threshold;
    j["lambda"] = c.lambda;
    j["bins"] = c.bins;
    if (!c.output.empty()) j["output"] = c.output;
    if (c.serve) j["serve"] = true;
    j["port"] = c.port;
    return j;
}

std::vector<RelationSchema> register_schemas(const EngineConfig& config, Catalog& catalog) {
    std::vector<RelationSchema> out;
    for (const auto& r : config.relations) {
        RelationSchema s{r.name, {}};
        for (const auto& a : r.attributes) {
            const AttrId id = catalog.add(a.name, a.type, a.kind);
            if (std::find(s.attrs.begin(), s.attrs.end(), id) != s.attrs.end())
                throw ValidationError("relation " + r.name + " repeats attribute " + a.name);
            s.attrs.push_back(id);
        }
        out.push_back(std::move(s));
    }
    return out;
}

namespace {

void collect_leaves(const TreeNodeConfig& n, std::vector<const TreeNodeConfig*>& out) {
    if (n.relation) out.push_back(&n);
    for (const auto& c : n.children) collect_leaves(c, out);
}

}  // namespace

std::vector<AttrId> lifted_attributes(const EngineConfig& config, const Catalog& catalog) {
    std::vector<const TreeNodeConfig*> leaves;
    collect_leaves(config.tree, leaves);
    std::vector<AttrId> out;
    for (const auto& r : config.relations) {
        const TreeNodeConfig* leaf = nullptr;
        for (auto* l : leaves)
            if (*l->relation == r.name) leaf = l;
        if (!leaf) continue;  // the tree builder reports it
        for (const auto& a : r.attributes) {
            if (std::find(leaf->key.begin(), leaf->key.end(), a.name) != leaf->key.end()) continue;
            const AttrId id = catalog.id(a.name);
            if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
        }
    }
    return out;
}

}  // namespace rivm
