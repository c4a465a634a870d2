#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bridge/error.hpp"
#include "bridge/policy.hpp"

namespace bridge {

// One multilingual QA item. Unknown JSONL fields survive a round-trip via
// extras_json (a serialized JSON object).
struct Record {
    std::string id;
    std::string question;
    std::string answer;
    std::string reasoning;  // "<step>"-delimited segments
    std::string language;
    std::string country;               // empty when absent
    std::optional<bool> assoc;
    std::string extras_json = "{}";

    bool operator==(const Record&) const = default;
};

struct SplitSpec {
    double sft = 0.70;
    double grpo = 0.15;
    double bench = 0.15;
    std::uint64_t seed = 0;

    void validate() const {
        if (sft < 0 || grpo < 0 || bench < 0)
            throw ConfigError("split fractions must be nonnegative");
        const double total = sft + grpo + bench;
        if (total < 1.0 - 1e-9 || total > 1.0 + 1e-9)
            throw ConfigError("split fractions must sum to 1, got " + std::to_string(total));
    }
};

struct SplitResult {
    std::vector<Record> sft;
    std::vector<Record> grpo;
    std::vector<Record> bench;
};

std::vector<Record> load_jsonl(const std::string& path);
void save_jsonl(const std::vector<Record>& records, const std::string& path);

Record record_from_json_line(const std::string& line, long line_number = -1);
std::string record_to_json_line(const Record& record);

// Seeded shuffle of unique question ids, then a contiguous partition.
// grpo and bench sizes are floor(n * fraction); the remainder goes to sft.
SplitResult split(const std::vector<Record>& records, const SplitSpec& spec);

struct Violation {
    std::string kind;       // "duplicate-id", "duplicate-question", "empty-field",
                            // "unknown-language"
    std::string record_id;
    std::string message;
};

// Data-quality report; an empty list means the batch is valid.
std::vector<Violation> validate(const std::vector<Record>& records,
                                const std::vector<std::string>& languages);

// ---- run configuration ----

struct OptimizerConfig {
    double lr = 1e-5;
    double min_lr = 0.0;
    double weight_decay = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.95;
    double warmup_ratio = 0.05;  // cosine schedule warmup fraction
    int batch_size = 8;
    int epochs = 5;
};

struct GrpoRunConfig {
    int group_size = 8;              // completions per prompt
    int max_completion_tokens = 256;
    int max_steps = 10;
    double clip_eps = 0.2;
    double kl_beta = 0.04;
    double temperature = 1.0;
};

struct RewardWeights {
    double w_format = 1.0;
    double w_answer = 1.0;
    double w_lang = 1.0;
    std::string language_scope = "full_output";        // or "reasoning_only"
    std::string answer_comparator = "exact_normalized";  // or "integer_equal"
};

struct SftConfig {
    std::string reduction = "sum";   // "sum" matches the training objective
    std::string mask = "target_only";  // or "full_sequence" for pretraining
};

struct EvalConfig {
    int max_new_tokens = 64;
    double temperature = 0.0;  // greedy decode for reproducible evaluation
};

struct RunConfig {
    std::uint64_t seed = 0;
    std::vector<std::string> languages;
    std::string translator_policy = "uniform";  // "uniform" or a language code
    double gate_probability = 0.01;

    OptimizerConfig optimizer;
    GrpoRunConfig grpo;
    RewardWeights rewards;
    SftConfig sft;
    EvalConfig eval;
    PolicyConfig policy;

    void validate() const;
};

// Parse the INI-style run configuration. Unknown sections or keys are
// configuration errors. BRIDGE_SEED in the environment overrides [run] seed.
RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& text);
std::string dump_run_config(const RunConfig& config);

}  // namespace bridge
