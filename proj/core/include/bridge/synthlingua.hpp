#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bridge/error.hpp"
#include "bridge/translator.hpp"

namespace bridge {

// A toy language: a private contiguous letter range (disjoint from every
// other language) and a lexicon mapping concept ids to surface words.
struct SynthLanguage {
    std::string code;                  // "aa", "bb", ...
    char alphabet_begin = 0;           // inclusive
    char alphabet_end = 0;             // inclusive
    int word_order = 0;                // sentence template id
    std::string resource_group;        // "high" | "medium" | "low"
    std::map<int, std::string> lexicon;  // concept id -> word, injective
};

struct WorldConfig {
    int n_languages = 5;
    // 120 slots x 5 countries x 5 languages = 3000 unique questions, 600 per
    // country, before any question text repeats.
    int n_fact_slots = 120;
    int letters_per_language = 8;
    int dominant_language = 0;  // designated high-resource language
    std::uint64_t seed = 0;
};

// A seeded universe of languages, countries, and facts. Country i's
// associated language is language i; the association matrix is diagonal.
struct SynthWorld {
    WorldConfig config;
    std::vector<SynthLanguage> languages;
    std::vector<std::string> countries;               // "AA", "BB", ...
    std::map<std::pair<int, int>, int> fact_bank;     // (country, slot concept) -> entity concept

    int language_index(const std::string& code) const;
    int country_index(const std::string& code) const;
    bool associated(const std::string& country_code, const std::string& language_code) const;
    std::vector<std::string> language_codes() const;

    std::string to_json() const;
    static SynthWorld from_json(const std::string& text);
};

SynthWorld make_world(const WorldConfig& config);

// One generated QA item before it is written out as a corpus record.
struct TaskRecord {
    std::string id;
    std::string kind;       // "factual" | "math"
    std::string question;
    std::string answer;
    std::string reasoning;  // "<step> ..." segments, no answer marker
    std::string language;
    std::string country;    // factual only
    bool has_assoc = false;
    bool assoc = false;
};

// Balanced factual QA over every language x country pair. Requires n >= K^2.
std::vector<TaskRecord> generate_factual(const SynthWorld& world, int n, std::uint64_t seed);

// Integer word problems (2 or 3 operands, values <= 99, results >= 0)
// rendered round-robin over the given languages.
std::vector<TaskRecord> generate_math(const SynthWorld& world, int n,
                                      const std::vector<std::string>& languages,
                                      std::uint64_t seed);

// Language-skewed corpus for base-model pretraining: dominant_share of the
// records in the world's dominant language, the rest spread uniformly.
std::vector<TaskRecord> generate_pretrain(const SynthWorld& world, int n, double dominant_share,
                                          std::uint64_t seed);

// Concept-level bijective re-rendering. Digits and marker tokens pass
// through; unknown words raise TranslationError naming the token.
std::string translate(const SynthWorld& world, const std::string& text,
                      const std::string& target_language);
TaskRecord translate(const SynthWorld& world, const TaskRecord& record,
                     const std::string& target_language);

// Per-language held-out style text for training the language identifier.
std::map<std::string, std::vector<std::string>> identifier_corpora(const SynthWorld& world,
                                                                   int samples_per_language,
                                                                   std::uint64_t seed);

// Corpus-schema view of generated tasks; kind is preserved as an extra field.
Record to_record(const TaskRecord& task);
std::vector<Record> to_records(const std::vector<TaskRecord>& tasks);

// Translator backed by a synthetic world's lexicons.
class WorldTranslator : public Translator {
public:
    explicit WorldTranslator(SynthWorld world) : world_(std::move(world)) {}
    Record translate_record(const Record& record,
                            const std::string& target_language) const override;
    const SynthWorld& world() const { return world_; }

private:
    SynthWorld world_;
};

}  // namespace bridge
