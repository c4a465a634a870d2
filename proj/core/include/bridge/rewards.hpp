#pragma once

#include <optional>
#include <string>

#include "bridge/corpus.hpp"
#include "bridge/langid.hpp"

namespace bridge {

enum class LanguageScope { FullOutput, ReasoningOnly };
enum class AnswerComparator { ExactNormalized, IntegerEqual };

struct RewardSpec {
    double w_format = 1.0;
    double w_answer = 1.0;
    double w_lang = 1.0;
    LanguageScope scope = LanguageScope::FullOutput;
    AnswerComparator comparator = AnswerComparator::ExactNormalized;

    void validate() const {
        if (w_format < 0 || w_answer < 0 || w_lang < 0)
            throw ConfigError("reward weights must be nonnegative");
        if (w_format + w_answer + w_lang <= 0)
            throw ConfigError("at least one reward weight must be positive");
    }

    static RewardSpec from_config(const RewardWeights& w);
};

struct RewardBreakdown {
    int r_format = 0;  // each component is a 0/1 indicator
    int r_answer = 0;
    int r_lang = 0;
    double total = 0.0;  // w_f*r_format + w_a*r_answer + w_l*r_lang, exactly
};

// Text after the answer marker, or nullopt when the marker is absent.
std::optional<std::string> extract_answer(const std::string& output);

// 1 iff the output has at least one step marker followed by exactly one
// answer marker with a nonempty tail.
int reward_format(const std::string& output);

// 1 iff the extracted answer matches gold under the comparator.
int reward_answer(const std::string& output, const std::string& gold,
                  AnswerComparator comparator);

// The language-consistency indicator: 1 iff the detector classifies the
// scoped text as the target language. UNDETERMINED scores 0.
int reward_language(const std::string& output, const std::string& target_language,
                    const Identifier& id, LanguageScope scope);

RewardBreakdown composite(const std::string& output, const Record& record,
                          const RewardSpec& spec, const Identifier& id);

// Comparator on bare answer strings (no marker extraction); shared with the
// mock judge so both agree by construction.
bool answers_match(const std::string& candidate, const std::string& gold,
                   AnswerComparator comparator);

}  // namespace bridge
