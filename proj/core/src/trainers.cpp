#include "bridge/trainers.hpp"

#include <cmath>

#include <json.hpp>

namespace bridge {

std::vector<double> compute_advantages(const std::vector<double>& rewards) {
    const std::size_t g = rewards.size();
    if (g < 2)
        throw ContractError("compute_advantages: group size must be >= 2, got " +
                            std::to_string(g));
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(g);
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= static_cast<double>(g);
    const double std_dev = std::sqrt(var);
    std::vector<double> out(g, 0.0);
    if (std_dev == 0.0) return out;  // zero-variance group
    for (std::size_t i = 0; i < g; ++i) out[i] = (rewards[i] - mean) / (std_dev + 1e-4);
    return out;
}

RunKind run_kind_from_string(const std::string& s) {
    if (s == "sft") return RunKind::Sft;
    if (s == "grpo") return RunKind::Grpo;
    if (s == "bridge") return RunKind::Bridge;
    throw ConfigError("unknown run kind '" + s + "' (expected sft, grpo, or bridge)");
}

const char* run_kind_name(RunKind kind) {
    switch (kind) {
        case RunKind::Sft: return "sft";
        case RunKind::Grpo: return "grpo";
        case RunKind::Bridge: return "bridge";
    }
    return "sft";
}

std::string step_log_to_json_line(const StepLog& log) {
    nlohmann::json j;
    j["step"] = log.step;
    j["epoch"] = log.epoch;
    j["kind"] = log.kind;
    j["lr"] = log.lr;
    j["loss"] = log.loss;
    j["loss_sft"] = log.loss_sft;
    j["loss_grpo"] = log.loss_grpo;
    j["m"] = log.gate;
    j["reward_mean"] = log.reward_mean;
    j["kl_mean"] = log.kl_mean;
    j["skipped"] = log.skipped;
    if (!log.target_language.empty()) j["target_language"] = log.target_language;
    return j.dump();
}

}  // namespace bridge
