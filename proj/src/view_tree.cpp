#include "ringivm/view_tree.hpp"

namespace rivm {

TreeNodeConfig tree_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("tree node must be a JSON object");
    TreeNodeConfig cfg;
    try {
        cfg.id = j.value("id", std::string{});
        if (j.contains("key")) cfg.key = j.at("key").get<std::vector<std::string>>();
        if (j.contains("relation")) cfg.relation = j.at("relation").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("tree node " + cfg.id + ": " + e.what());
    }
    if (j.contains("children")) {
        if (!j.at("children").is_array()) throw ValidationError("tree node " + cfg.id + ": children must be an array");
        for (const auto& c : j.at("children")) cfg.children.push_back(tree_config_from_json(c));
    }
    return cfg;
}

nlohmann::json tree_config_to_json(const TreeNodeConfig& config) {
    nlohmann::json j;
    j["id"] = config.id;
    j["key"] = config.key;
    if (config.relation) j["relation"] = *config.relation;
    if (!config.children.empty()) {
        j["children"] = nlohmann::json::array();
        for (const auto& c : config.children) j["children"].push_back(tree_config_to_json(c));
    }
    return j;
}

}  // namespace rivm
