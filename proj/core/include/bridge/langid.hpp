#pragma once

#include <array>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "bridge/error.hpp"

namespace bridge {

// Abstention value. Counts as a language mismatch everywhere downstream.
inline constexpr const char* kUndetermined = "und";

struct IdentifierConfig {
    std::size_t min_length = 8;     // minimum evaluable bytes after preprocessing
    double margin_threshold = 2.0;  // nats of log-posterior gap required to decide
    bool strip_markers = true;      // drop "<step>"/"<answer>" before scoring
};

// Add-one-smoothed byte n-gram table for one order. The event space is the
// set of n-grams seen in any training corpus plus one unseen bucket, so the
// smoothed probabilities sum to one.
struct NgramTable {
    std::unordered_map<std::string, double> loglik;
    double oov_loglik = 0.0;

    double score(const std::string& gram) const {
        auto it = loglik.find(gram);
        return it == loglik.end() ? oov_loglik : it->second;
    }
};

struct LanguageProfile {
    std::string code;
    double log_prior = 0.0;
    std::array<NgramTable, 3> tables;  // orders 1, 2, 3
};

struct IdentifyResult {
    std::string language = kUndetermined;
    double margin = 0.0;  // log-posterior gap to the runner-up

    bool undetermined() const { return language == kUndetermined; }
};

// Multinomial naive-Bayes language detector over byte n-grams (n = 1, 2, 3)
// with a closed language set. Immutable after training.
class Identifier {
public:
    // One profile per language from add-one-smoothed counts, uniform priors.
    static Identifier train(const std::map<std::string, std::vector<std::string>>& corpora,
                            IdentifierConfig config = {});

    IdentifyResult identify(const std::string& text) const;

    // Strips marker strings, digits, ASCII punctuation and operators, and
    // collapses whitespace runs; what identify actually scores.
    std::string preprocess(const std::string& text) const;

    bool covers(const std::string& code) const;
    const std::vector<LanguageProfile>& profiles() const { return profiles_; }
    const IdentifierConfig& config() const { return config_; }

    std::string to_json() const;
    static Identifier from_json(const std::string& text);

private:
    IdentifierConfig config_;
    std::vector<LanguageProfile> profiles_;
};

}  // namespace bridge
