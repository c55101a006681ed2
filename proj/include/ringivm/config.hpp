#pragma once

#include "ringivm/view_tree.hpp"

#include <filesystem>

namespace rivm {

enum class Mode { Covar, MI, Count };

std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);

struct AttributeConfig {
    std::string name;
    ValueType type = ValueType::Int;
    AttrKind kind = AttrKind::Categorical;
};

struct RelationConfig {
    std::string name;
    std::string csv;  // resolved against the config directory; may be empty
    std::vector<AttributeConfig> attributes;
};

/// One JSON document describing data, query tree and analytics parameters.
struct EngineConfig {
    std::vector<RelationConfig> relations;
    Mode mode = Mode::Covar;
    TreeNodeConfig tree;
    std::string updates;  // may be empty: no updates
    std::size_t batch_size = 10000;
    std::optional<int> pause_ms;  // unset: 0 headless, 1000 when serving
    std::optional<std::string> label;
    std::vector<std::string> features;  // empty: every tracked attribute but the label
    double mi_threshold = 0.0;
    double lambda = 0.0;
    int bins = 16;
    std::string output;
    bool serve = false;
    int port = 8080;

    std::filesystem::path base_dir;  // relative paths resolve against this

    std::filesystem::path resolve(const std::string& path) const;
    int effective_pause_ms() const { return pause_ms.value_or(serve ? 1000 : 0); }
};

EngineConfig parse_config(const nlohmann::json& j, std::filesystem::path base_dir = {});
EngineConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const EngineConfig& config);

/// Registers the attributes in `catalog` and returns the relation schemas.
std::vector<RelationSchema> register_schemas(const EngineConfig& config, Catalog& catalog);

/// Attributes aggregated away at leaves (those a ring must lift), in relation
/// then column order.
std::vector<AttrId> lifted_attributes(const EngineConfig& config, const Catalog& catalog);

}  // namespace rivm
