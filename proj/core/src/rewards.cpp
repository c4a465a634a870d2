#include "bridge/rewards.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>

#include "bridge/tokens.hpp"

namespace bridge {

namespace {

std::size_t count_occurrences(const std::string& s, const char* needle) {
    std::size_t count = 0, pos = 0;
    const std::size_t n = std::strlen(needle);
    while ((pos = s.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += n;
    }
    return count;
}

std::string trim_ws(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string normalize(const std::string& s) {
    // lowercase, strip leading/trailing whitespace and punctuation
    std::size_t b = 0, e = s.size();
    auto strippable = [](unsigned char c) {
        return std::isspace(c) || (c < 128 && std::ispunct(c));
    };
    while (b < e && strippable(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && strippable(static_cast<unsigned char>(s[e - 1]))) --e;
    std::string out = s.substr(b, e - b);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::optional<long long> parse_integer(const std::string& s) {
    const std::string t = trim_ws(s);
    if (t.empty()) return std::nullopt;
    std::size_t i = 0;
    if (t[0] == '+' || t[0] == '-') i = 1;
    if (i == t.size()) return std::nullopt;
    for (std::size_t k = i; k < t.size(); ++k)
        if (!std::isdigit(static_cast<unsigned char>(t[k]))) return std::nullopt;
    try {
        return std::stoll(t);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

}  // namespace

RewardSpec RewardSpec::from_config(const RewardWeights& w) {
    RewardSpec spec;
    spec.w_format = w.w_format;
    spec.w_answer = w.w_answer;
    spec.w_lang = w.w_lang;
    spec.scope = w.language_scope == "reasoning_only" ? LanguageScope::ReasoningOnly
                                                      : LanguageScope::FullOutput;
    spec.comparator = w.answer_comparator == "integer_equal" ? AnswerComparator::IntegerEqual
                                                             : AnswerComparator::ExactNormalized;
    spec.validate();
    return spec;
}

std::optional<std::string> extract_answer(const std::string& output) {
    const auto pos = output.find(tok::kAnswerMark);
    if (pos == std::string::npos) return std::nullopt;
    return output.substr(pos + std::strlen(tok::kAnswerMark));
}

int reward_format(const std::string& output) {
    if (count_occurrences(output, tok::kAnswerMark) != 1) return 0;
    const auto answer_pos = output.find(tok::kAnswerMark);
    const auto step_pos = output.find(tok::kStepMark);
    if (step_pos == std::string::npos || step_pos > answer_pos) return 0;
    const std::string tail = output.substr(answer_pos + std::strlen(tok::kAnswerMark));
    return trim_ws(tail).empty() ? 0 : 1;
}

bool answers_match(const std::string& candidate, const std::string& gold,
                   AnswerComparator comparator) {
    if (comparator == AnswerComparator::IntegerEqual) {
        const auto a = parse_integer(candidate);
        const auto b = parse_integer(gold);
        return a.has_value() && b.has_value() && *a == *b;
    }
    return normalize(candidate) == normalize(gold);
}

int reward_answer(const std::string& output, const std::string& gold,
                  AnswerComparator comparator) {
    const auto extracted = extract_answer(output);
    if (!extracted.has_value()) return 0;
    return answers_match(*extracted, gold, comparator) ? 1 : 0;
}

int reward_language(const std::string& output, const std::string& target_language,
                    const Identifier& id, LanguageScope scope) {
    if (!id.covers(target_language))
        throw ConfigError("identifier does not cover target language '" + target_language +
                          "'");
    std::string scoped = output;
    if (scope == LanguageScope::ReasoningOnly) {
        const auto pos = output.find(tok::kAnswerMark);
        if (pos != std::string::npos) scoped = output.substr(0, pos);
    }
    const IdentifyResult r = id.identify(scoped);
    return (!r.undetermined() && r.language == target_language) ? 1 : 0;
}

RewardBreakdown composite(const std::string& output, const Record& record,
                          const RewardSpec& spec, const Identifier& id) {
    spec.validate();
    RewardBreakdown b;
    b.r_format = reward_format(output);
    b.r_answer = reward_answer(output, record.answer, spec.comparator);
    b.r_lang = reward_language(output, record.language, id, spec.scope);
    b.total = spec.w_format * b.r_format + spec.w_answer * b.r_answer + spec.w_lang * b.r_lang;
    return b;
}

}  // namespace bridge
