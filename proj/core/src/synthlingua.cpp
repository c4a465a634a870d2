#include "bridge/synthlingua.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "bridge/rng.hpp"
#include "bridge/tokens.hpp"

namespace bridge {

namespace {

// Concept id layout. Countries and fact slots are dense blocks; entities are
// one per (country, slot) cell; function words sit above 1000.
constexpr int kSlotBase = 100;
constexpr int kEntityBase = 200;
constexpr int kFnBase = 1000;

enum FnWord : int {
    kWhat = kFnBase,
    kOf,
    kIs,
    kRecall,
    kFact,
    kTherefore,
    kAnswerWord,
    kCompute,
    kPlus,
    kMinus,
    kThen,
    kFnEnd
};

int entity_concept(const WorldConfig& cfg, int country, int slot) {
    return kEntityBase + country * cfg.n_fact_slots + slot;
}

std::vector<int> all_concepts(const WorldConfig& cfg) {
    std::vector<int> ids;
    for (int c = 0; c < cfg.n_languages; ++c) ids.push_back(c);
    for (int s = 0; s < cfg.n_fact_slots; ++s) ids.push_back(kSlotBase + s);
    for (int c = 0; c < cfg.n_languages; ++c)
        for (int s = 0; s < cfg.n_fact_slots; ++s) ids.push_back(entity_concept(cfg, c, s));
    for (int f = kFnBase; f < kFnEnd; ++f) ids.push_back(f);
    return ids;
}

bool all_digits(const std::string& s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isdigit(c) != 0; });
}

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> words;
    std::istringstream in(text);
    std::string w;
    while (in >> w) words.push_back(w);
    return words;
}

std::string join_words(const std::vector<std::string>& words) {
    std::string out;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i) out.push_back(' ');
        out += words[i];
    }
    return out;
}

std::string make_word(Rng& rng, char begin, char end) {
    const int width = end - begin + 1;
    const std::size_t len = 4 + rng.next_below(3);
    std::string w;
    for (std::size_t i = 0; i < len; ++i)
        w.push_back(static_cast<char>(begin + static_cast<int>(rng.next_below(width))));
    return w;
}

const std::string& word(const SynthLanguage& lang, int concept_id) {
    auto it = lang.lexicon.find(concept_id);
    if (it == lang.lexicon.end())
        throw DataError("language " + lang.code + " has no word for concept " +
                        std::to_string(concept_id));
    return it->second;
}

std::string render_factual_question(const SynthLanguage& lang, int country_concept,
                                    int slot_concept) {
    const std::string& q = word(lang, kWhat);
    const std::string& s = word(lang, slot_concept);
    const std::string& of = word(lang, kOf);
    const std::string& c = word(lang, country_concept);
    switch (lang.word_order % 3) {
        case 1: return join_words({c, of, s, q});
        case 2: return join_words({s, c, q});
        default: return join_words({q, s, of, c});
    }
}

std::string render_factual_trace(Rng& rng, const SynthLanguage& lang, int country_concept,
                                 int slot_concept, int entity, int n_steps) {
    std::ostringstream out;
    out << tok::kStepMark << " " << word(lang, kRecall) << " " << word(lang, country_concept)
        << " " << word(lang, slot_concept);
    if (n_steps >= 3)
        out << " " << tok::kStepMark << " " << word(lang, kThen) << " "
            << word(lang, kFact) << " " << word(lang, slot_concept);
    out << " " << tok::kStepMark << " " << word(lang, kFact) << " " << word(lang, slot_concept)
        << " " << word(lang, kOf) << " " << word(lang, country_concept) << " "
        << word(lang, kIs) << " " << word(lang, entity);
    if (n_steps >= 4)
        out << " " << tok::kStepMark << " " << word(lang, kTherefore) << " "
            << word(lang, entity);
    (void)rng;
    return out.str();
}

}  // namespace

int SynthWorld::language_index(const std::string& code) const {
    for (std::size_t i = 0; i < languages.size(); ++i)
        if (languages[i].code == code) return static_cast<int>(i);
    throw DataError("unknown language code '" + code + "'");
}

int SynthWorld::country_index(const std::string& code) const {
    for (std::size_t i = 0; i < countries.size(); ++i)
        if (countries[i] == code) return static_cast<int>(i);
    throw DataError("unknown country code '" + code + "'");
}

bool SynthWorld::associated(const std::string& country_code,
                            const std::string& language_code) const {
    // Diagonal association matrix: country i <-> language i.
    return country_index(country_code) == language_index(language_code);
}

std::vector<std::string> SynthWorld::language_codes() const {
    std::vector<std::string> codes;
    for (const auto& l : languages) codes.push_back(l.code);
    return codes;
}

SynthWorld make_world(const WorldConfig& config) {
    if (config.n_languages < 2) throw ConfigError("world needs at least 2 languages");
    if (config.n_fact_slots < 1) throw ConfigError("world needs at least 1 fact slot");
    if (config.letters_per_language < 3)
        throw ConfigError("letters_per_language must be at least 3");
    if (config.dominant_language < 0 || config.dominant_language >= config.n_languages)
        throw ConfigError("dominant_language out of range");

    SynthWorld world;
    world.config = config;

    // Allocate disjoint contiguous letter ranges, lowercase block then
    // uppercase block.
    struct Block {
        char begin, end;
    };
    const Block blocks[2] = {{'a', 'z'}, {'A', 'Z'}};
    int block = 0;
    char cursor = blocks[0].begin;
    for (int i = 0; i < config.n_languages; ++i) {
        const int width = config.letters_per_language;
        if (cursor + width - 1 > blocks[block].end) {
            ++block;
            if (block >= 2)
                throw ConfigError(
                    "alphabet space exhausted: reduce n_languages or letters_per_language");
            cursor = blocks[block].begin;
            if (cursor + width - 1 > blocks[block].end)
                throw ConfigError("letters_per_language too large for a case block");
        }
        SynthLanguage lang;
        lang.code = std::string(2, static_cast<char>('a' + i));
        lang.alphabet_begin = cursor;
        lang.alphabet_end = static_cast<char>(cursor + width - 1);
        lang.word_order = i % 3;
        cursor = static_cast<char>(cursor + width);
        world.languages.push_back(std::move(lang));
    }

    // Resource groups: dominant is high, first half of the rest medium.
    const int rest = config.n_languages - 1;
    int seen_rest = 0;
    for (int i = 0; i < config.n_languages; ++i) {
        if (i == config.dominant_language) {
            world.languages[i].resource_group = "high";
            continue;
        }
        world.languages[i].resource_group = seen_rest < (rest + 1) / 2 ? "medium" : "low";
        ++seen_rest;
    }

    for (int i = 0; i < config.n_languages; ++i)
        world.countries.push_back(std::string(2, static_cast<char>('A' + i)));

    // Lexicons: every concept gets a word in every language, injectively.
    Rng rng(config.seed);
    const std::vector<int> concepts = all_concepts(config);
    for (auto& lang : world.languages) {
        Rng lang_rng = rng.fork();
        std::unordered_set<std::string> used;
        for (int concept_id : concepts) {
            std::string w = make_word(lang_rng, lang.alphabet_begin, lang.alphabet_end);
            while (used.count(w)) w = make_word(lang_rng, lang.alphabet_begin, lang.alphabet_end);
            used.insert(w);
            lang.lexicon.emplace(concept_id, w);
        }
    }

    for (int c = 0; c < config.n_languages; ++c)
        for (int s = 0; s < config.n_fact_slots; ++s)
            world.fact_bank[{c, s}] = entity_concept(config, c, s);

    return world;
}

std::vector<TaskRecord> generate_factual(const SynthWorld& world, int n, std::uint64_t seed) {
    const int K = world.config.n_languages;
    if (n < K * K)
        throw ContractError("generate_factual: n = " + std::to_string(n) +
                            " is below K^2 = " + std::to_string(K * K));
    Rng rng(seed);

    // Per-pair shuffled slot order so questions stay unique until the
    // K^2 * n_fact_slots question space is exhausted.
    std::vector<std::vector<int>> slot_order(static_cast<std::size_t>(K * K));
    for (auto& slots : slot_order) {
        slots.resize(static_cast<std::size_t>(world.config.n_fact_slots));
        for (std::size_t s = 0; s < slots.size(); ++s) slots[s] = static_cast<int>(s);
        rng.shuffle(slots);
    }

    std::vector<TaskRecord> records;
    records.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const int pair = i % (K * K);
        const int lang_idx = pair / K;
        const int country_idx = pair % K;
        const SynthLanguage& lang = world.languages[static_cast<std::size_t>(lang_idx)];
        const auto& slots = slot_order[static_cast<std::size_t>(pair)];
        const int slot = slots[static_cast<std::size_t>(i / (K * K)) % slots.size()];
        const int slot_concept = kSlotBase + slot;
        const int entity = world.fact_bank.at({country_idx, slot});
        const int n_steps = 2 + static_cast<int>(rng.next_below(3));

        TaskRecord r;
        r.id = "fact-" + std::to_string(i);
        r.kind = "factual";
        r.language = lang.code;
        r.country = world.countries[static_cast<std::size_t>(country_idx)];
        r.has_assoc = true;
        r.assoc = country_idx == lang_idx;
        r.question = render_factual_question(lang, country_idx, slot_concept);
        r.reasoning = render_factual_trace(rng, lang, country_idx, slot_concept, entity, n_steps);
        r.answer = word(lang, entity);
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<TaskRecord> generate_math(const SynthWorld& world, int n,
                                      const std::vector<std::string>& languages,
                                      std::uint64_t seed) {
    if (n < 1) throw ContractError("generate_math: n must be >= 1");
    if (languages.empty()) throw ContractError("generate_math: no languages given");
    Rng rng(seed);
    std::vector<TaskRecord> records;
    records.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto& code = languages[static_cast<std::size_t>(i) % languages.size()];
        const SynthLanguage& lang =
            world.languages[static_cast<std::size_t>(world.language_index(code))];

        const bool three = rng.next_bernoulli(0.5);
        long a = static_cast<long>(rng.next_below(100));
        long b = static_cast<long>(rng.next_below(100));
        long c = three ? static_cast<long>(rng.next_below(100)) : 0;
        const bool minus = rng.next_bernoulli(0.5);
        // keep intermediate and final results nonnegative
        if (minus && b > a) std::swap(a, b);
        const long partial = minus ? a - b : a + b;
        const long total = partial + c;

        const std::string& op = word(lang, minus ? kMinus : kPlus);
        const std::string& plus = word(lang, kPlus);
        std::vector<std::string> q = {word(lang, kCompute), std::to_string(a), op,
                                      std::to_string(b)};
        if (three) {
            q.push_back(plus);
            q.push_back(std::to_string(c));
        }

        std::ostringstream trace;
        trace << tok::kStepMark << " " << a << " " << op << " " << b << " "
              << word(lang, kIs) << " " << partial;
        if (three)
            trace << " " << tok::kStepMark << " " << partial << " " << plus << " " << c << " "
                  << word(lang, kIs) << " " << total;
        trace << " " << tok::kStepMark << " " << word(lang, kAnswerWord) << " " << total;

        TaskRecord r;
        r.id = "math-" + std::to_string(i);
        r.kind = "math";
        r.language = lang.code;
        r.question = join_words(q);
        r.reasoning = trace.str();
        r.answer = std::to_string(total);
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<TaskRecord> generate_pretrain(const SynthWorld& world, int n, double dominant_share,
                                          std::uint64_t seed) {
    if (n < 1) throw ContractError("generate_pretrain: n must be >= 1");
    if (dominant_share < 0.0 || dominant_share > 1.0)
        throw ContractError("generate_pretrain: dominant_share outside [0, 1]");
    const int K = world.config.n_languages;
    Rng rng(seed);
    std::vector<TaskRecord> records;
    records.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        int lang_idx = world.config.dominant_language;
        if (!rng.next_bernoulli(dominant_share)) {
            int other = static_cast<int>(rng.next_below(K - 1));
            lang_idx = other >= world.config.dominant_language ? other + 1 : other;
        }
        const SynthLanguage& lang = world.languages[static_cast<std::size_t>(lang_idx)];
        const int country_idx = static_cast<int>(rng.next_below(K));
        const int slot = static_cast<int>(rng.next_below(world.config.n_fact_slots));
        const int slot_concept = kSlotBase + slot;
        const int entity = world.fact_bank.at({country_idx, slot});
        const int n_steps = 2 + static_cast<int>(rng.next_below(3));

        TaskRecord r;
        r.id = "pre-" + std::to_string(i);
        r.kind = "factual";
        r.language = lang.code;
        r.country = world.countries[static_cast<std::size_t>(country_idx)];
        r.has_assoc = true;
        r.assoc = country_idx == lang_idx;
        r.question = render_factual_question(lang, country_idx, slot_concept);
        r.reasoning = render_factual_trace(rng, lang, country_idx, slot_concept, entity, n_steps);
        r.answer = word(lang, entity);
        records.push_back(std::move(r));
    }
    return records;
}

std::string translate(const SynthWorld& world, const std::string& text,
                      const std::string& target_language) {
    const SynthLanguage& target =
        world.languages[static_cast<std::size_t>(world.language_index(target_language))];

    // word -> concept over all languages; alphabets are disjoint so there are
    // no cross-language collisions.
    std::unordered_map<std::string, int> reverse;
    for (const auto& lang : world.languages)
        for (const auto& [concept_id, w] : lang.lexicon) reverse.emplace(w, concept_id);

    std::vector<std::string> out;
    for (const auto& token : split_words(text)) {
        if (all_digits(token) || token == tok::kStepMark || token == tok::kAnswerMark) {
            out.push_back(token);
            continue;
        }
        auto it = reverse.find(token);
        if (it == reverse.end()) throw TranslationError(token);
        out.push_back(word(target, it->second));
    }
    return join_words(out);
}

TaskRecord translate(const SynthWorld& world, const TaskRecord& record,
                     const std::string& target_language) {
    TaskRecord out = record;
    out.question = translate(world, record.question, target_language);
    out.answer = translate(world, record.answer, target_language);
    out.reasoning = translate(world, record.reasoning, target_language);
    out.language = target_language;
    if (!record.country.empty() && record.has_assoc)
        out.assoc = world.associated(record.country, target_language);
    return out;
}

std::map<std::string, std::vector<std::string>> identifier_corpora(const SynthWorld& world,
                                                                   int samples_per_language,
                                                                   std::uint64_t seed) {
    Rng rng(seed);
    const std::vector<int> concepts = all_concepts(world.config);
    std::map<std::string, std::vector<std::string>> corpora;
    for (const auto& lang : world.languages) {
        Rng lang_rng = rng.fork();
        std::vector<std::string> samples;
        for (int i = 0; i < samples_per_language; ++i) {
            const std::size_t len = 6 + lang_rng.next_below(7);
            std::vector<std::string> words;
            for (std::size_t k = 0; k < len; ++k) {
                const int concept_id = concepts[lang_rng.next_below(concepts.size())];
                words.push_back(word(lang, concept_id));
            }
            samples.push_back(join_words(words));
        }
        corpora.emplace(lang.code, std::move(samples));
    }
    return corpora;
}

Record to_record(const TaskRecord& task) {
    Record r;
    r.id = task.id;
    r.question = task.question;
    r.answer = task.answer;
    r.reasoning = task.reasoning;
    r.language = task.language;
    r.country = task.country;
    if (task.has_assoc) r.assoc = task.assoc;
    r.extras_json = nlohmann::json{{"kind", task.kind}}.dump();
    return r;
}

std::vector<Record> to_records(const std::vector<TaskRecord>& tasks) {
    std::vector<Record> out;
    out.reserve(tasks.size());
    for (const auto& t : tasks) out.push_back(to_record(t));
    return out;
}

Record WorldTranslator::translate_record(const Record& record,
                                         const std::string& target_language) const {
    Record out = record;
    out.question = translate(world_, record.question, target_language);
    out.answer = translate(world_, record.answer, target_language);
    out.reasoning = translate(world_, record.reasoning, target_language);
    out.language = target_language;
    if (!record.country.empty() && record.assoc.has_value())
        out.assoc = world_.associated(record.country, target_language);
    return out;
}

std::string SynthWorld::to_json() const {
    nlohmann::json j;
    j["format"] = "bridge-world";
    j["version"] = 1;
    j["config"] = {{"n_languages", config.n_languages},
                   {"n_fact_slots", config.n_fact_slots},
                   {"letters_per_language", config.letters_per_language},
                   {"dominant_language", config.dominant_language},
                   {"seed", config.seed}};
    nlohmann::json langs = nlohmann::json::array();
    for (const auto& l : languages) {
        nlohmann::json jl;
        jl["code"] = l.code;
        jl["alphabet_begin"] = std::string(1, l.alphabet_begin);
        jl["alphabet_end"] = std::string(1, l.alphabet_end);
        jl["word_order"] = l.word_order;
        jl["resource_group"] = l.resource_group;
        nlohmann::json lex = nlohmann::json::object();
        for (const auto& [concept_id, w] : l.lexicon) lex[std::to_string(concept_id)] = w;
        jl["lexicon"] = std::move(lex);
        langs.push_back(std::move(jl));
    }
    j["languages"] = std::move(langs);
    j["countries"] = countries;
    nlohmann::json facts = nlohmann::json::object();
    for (const auto& [key, entity] : fact_bank)
        facts[std::to_string(key.first) + "," + std::to_string(key.second)] = entity;
    j["fact_bank"] = std::move(facts);
    return j.dump();
}

SynthWorld SynthWorld::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("world: ") + e.what());
    }
    if (j.value("format", "") != "bridge-world")
        throw SchemaError("format", "not a world definition");

    SynthWorld w;
    const auto& jc = j.at("config");
    w.config.n_languages = jc.at("n_languages").get<int>();
    w.config.n_fact_slots = jc.at("n_fact_slots").get<int>();
    w.config.letters_per_language = jc.at("letters_per_language").get<int>();
    w.config.dominant_language = jc.at("dominant_language").get<int>();
    w.config.seed = jc.at("seed").get<std::uint64_t>();

    for (const auto& jl : j.at("languages")) {
        SynthLanguage l;
        l.code = jl.at("code").get<std::string>();
        l.alphabet_begin = jl.at("alphabet_begin").get<std::string>().at(0);
        l.alphabet_end = jl.at("alphabet_end").get<std::string>().at(0);
        l.word_order = jl.at("word_order").get<int>();
        l.resource_group = jl.at("resource_group").get<std::string>();
        for (const auto& [key, value] : jl.at("lexicon").items())
            l.lexicon.emplace(std::stoi(key), value.get<std::string>());
        w.languages.push_back(std::move(l));
    }
    w.countries = j.at("countries").get<std::vector<std::string>>();
    for (const auto& [key, value] : j.at("fact_bank").items()) {
        const auto comma = key.find(',');
        if (comma == std::string::npos) throw SchemaError("fact_bank", "bad key " + key);
        w.fact_bank[{std::stoi(key.substr(0, comma)), std::stoi(key.substr(comma + 1))}] =
            value.get<int>();
    }
    return w;
}

}  // namespace bridge
