#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bridge/corpus.hpp"
#include "bridge/langid.hpp"
#include "bridge/metrics.hpp"
#include "bridge/policy.hpp"
#include "bridge/rewards.hpp"
#include "bridge/rng.hpp"
#include "bridge/tokens.hpp"
#include "bridge/trainers.hpp"

namespace bridge {

template <typename S>
struct EvalOutput {
    std::vector<EvalRecord> records;
    std::vector<std::pair<std::string, std::string>> outputs;  // (record id, decoded text)
};

// The evaluation protocol: decode one completion per benchmark record, detect
// its language over the full output, and score the extracted answer against
// gold. resource_groups maps language code -> group label (may be empty).
template <typename S>
EvalOutput<S> evaluate_policy(Policy<S>& policy, const std::vector<Record>& bench,
                              const Identifier& id,
                              const std::map<std::string, std::string>& resource_groups,
                              const EvalConfig& eval_config, const RewardWeights& rewards,
                              std::uint64_t seed) {
    if (bench.empty()) throw DataError("evaluation benchmark is empty");
    const RewardSpec spec = RewardSpec::from_config(rewards);

    EvalOutput<S> out;
    Rng seeds(seed);
    for (const auto& record : bench) {
        const TokenSequence prompt = render_prompt(record.question);
        const int context = policy.config.context_length;
        if (prompt.ids.size() + 1 >= static_cast<std::size_t>(context)) {
            EvalRecord er;
            er.record_id = record.id;
            er.target_language = record.language;
            er.detected_language = kUndetermined;  // nothing decodable
            er.assoc = record.assoc;
            er.country = record.country;
            const auto group = resource_groups.find(record.language);
            if (group != resource_groups.end()) er.resource_group = group->second;
            out.records.push_back(std::move(er));
            out.outputs.emplace_back(record.id, "");
            seeds.next_u64();
            continue;
        }
        const int room = context - static_cast<int>(prompt.ids.size()) - 1;
        const int max_new = std::min(eval_config.max_new_tokens, room);
        const auto sampled = sample(policy, prompt.ids, max_new, eval_config.temperature,
                                    tok::kStop, seeds.next_u64());
        const std::string text = decode(sampled.tokens);

        EvalRecord er;
        er.record_id = record.id;
        er.target_language = record.language;
        er.detected_language = id.identify(text).language;
        er.answer_correct = reward_answer(text, record.answer, spec.comparator) == 1;
        er.assoc = record.assoc;
        er.country = record.country;
        const auto group = resource_groups.find(record.language);
        if (group != resource_groups.end()) er.resource_group = group->second;
        out.records.push_back(std::move(er));
        out.outputs.emplace_back(record.id, text);
    }
    return out;
}

}  // namespace bridge
