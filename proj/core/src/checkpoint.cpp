#include "bridge/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

namespace bridge {

namespace {

using nlohmann::json;

json config_to_json(const PolicyConfig& c) {
    return json{{"vocab_size", c.vocab_size},       {"model_dim", c.model_dim},
                {"n_layers", c.n_layers},           {"n_heads", c.n_heads},
                {"context_length", c.context_length}, {"init_std", c.init_std},
                {"seed", c.seed},                   {"temperature", c.temperature}};
}

PolicyConfig config_from_json(const json& j) {
    PolicyConfig c;
    c.vocab_size = j.at("vocab_size").get<int>();
    c.model_dim = j.at("model_dim").get<int>();
    c.n_layers = j.at("n_layers").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.context_length = j.at("context_length").get<int>();
    c.init_std = j.at("init_std").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.temperature = j.value("temperature", 1.0);
    return c;
}

PolicyRole role_from_string(const std::string& s) {
    if (s == "current") return PolicyRole::Current;
    if (s == "old_snapshot") return PolicyRole::OldSnapshot;
    if (s == "frozen_base") return PolicyRole::FrozenBase;
    throw SchemaError("role", "unknown policy role '" + s + "'");
}

}  // namespace

void save_checkpoint(const CheckpointData& data, const std::string& path) {
    json j;
    j["format"] = "bridge-checkpoint";
    j["version"] = data.format_version;
    j["precision"] = data.precision;
    j["role"] = role_name(data.role);
    j["config"] = config_to_json(data.config);
    json params = json::array();
    for (const auto& [name, t] : data.params) {
        json p;
        p["name"] = name;
        p["shape"] = t.shape;
        p["data"] = t.values;
        params.push_back(std::move(p));
    }
    j["params"] = std::move(params);

    std::ofstream out(path);
    if (!out) throw DataError("cannot open checkpoint file for writing: " + path);
    out << j.dump() << "\n";
}

CheckpointData load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("checkpoint: ") + e.what());
    }
    if (j.value("format", "") != "bridge-checkpoint")
        throw SchemaError("format", "not a bridge checkpoint: " + path);

    CheckpointData data;
    data.format_version = j.at("version").get<int>();
    data.precision = j.at("precision").get<std::string>();
    data.role = role_from_string(j.at("role").get<std::string>());
    data.config = config_from_json(j.at("config"));
    for (const auto& p : j.at("params")) {
        Tensor<double> t(p.at("shape").get<std::vector<std::size_t>>(),
                         p.at("data").get<std::vector<double>>());
        data.params.emplace_back(p.at("name").get<std::string>(), std::move(t));
    }
    return data;
}

}  // namespace bridge
