#include "bridge/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "bridge/rng.hpp"

namespace bridge {

namespace {

using nlohmann::json;

const std::set<std::string> kKnownFields = {"id",       "question", "answer", "reasoning",
                                            "language", "country",  "assoc"};

std::string require_string(const json& j, const char* field, long line) {
    if (!j.contains(field)) {
        if (line >= 0)
            throw SchemaError(field, "missing at line " + std::to_string(line));
        throw SchemaError(field, "missing");
    }
    if (!j.at(field).is_string()) throw SchemaError(field, "must be a string");
    return j.at(field).get<std::string>();
}

}  // namespace

Record record_from_json_line(const std::string& line, long line_number) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(e.what(), line_number);
    }
    if (!j.is_object()) throw ParseError("record line is not a JSON object", line_number);

    Record r;
    r.id = require_string(j, "id", line_number);
    r.question = require_string(j, "question", line_number);
    r.answer = require_string(j, "answer", line_number);
    r.reasoning = require_string(j, "reasoning", line_number);
    r.language = require_string(j, "language", line_number);
    if (j.contains("country") && !j.at("country").is_null())
        r.country = j.at("country").get<std::string>();
    if (j.contains("assoc") && !j.at("assoc").is_null())
        r.assoc = j.at("assoc").get<bool>();

    json extras = json::object();
    for (const auto& [key, value] : j.items())
        if (!kKnownFields.count(key)) extras[key] = value;
    r.extras_json = extras.dump();
    return r;
}

std::string record_to_json_line(const Record& record) {
    json j;
    try {
        j = json::parse(record.extras_json);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("record extras: ") + e.what());
    }
    j["id"] = record.id;
    j["question"] = record.question;
    j["answer"] = record.answer;
    j["reasoning"] = record.reasoning;
    j["language"] = record.language;
    if (!record.country.empty()) j["country"] = record.country;
    if (record.assoc.has_value()) j["assoc"] = *record.assoc;
    return j.dump();
}

std::vector<Record> load_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::vector<Record> records;
    std::string line;
    long line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        records.push_back(record_from_json_line(line, line_number));
    }
    return records;
}

void save_jsonl(const std::vector<Record>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path + " for writing");
    for (const auto& r : records) out << record_to_json_line(r) << "\n";
}

SplitResult split(const std::vector<Record>& records, const SplitSpec& spec) {
    spec.validate();

    // Unique question ids in first-appearance order, then a seeded shuffle.
    std::vector<std::string> ids;
    std::unordered_set<std::string> seen;
    for (const auto& r : records)
        if (seen.insert(r.id).second) ids.push_back(r.id);

    Rng rng(spec.seed);
    rng.shuffle(ids);

    const auto n = ids.size();
    const auto n_grpo = static_cast<std::size_t>(
        std::floor(static_cast<double>(n) * spec.grpo + 1e-9));
    const auto n_bench = static_cast<std::size_t>(
        std::floor(static_cast<double>(n) * spec.bench + 1e-9));
    // remainder to sft
    const auto n_sft = n - n_grpo - n_bench;

    std::unordered_map<std::string, int> bucket;  // 0 sft, 1 grpo, 2 bench
    for (std::size_t i = 0; i < n; ++i)
        bucket[ids[i]] = i < n_sft ? 0 : (i < n_sft + n_grpo ? 1 : 2);

    SplitResult out;
    for (const auto& r : records) {
        switch (bucket.at(r.id)) {
            case 0: out.sft.push_back(r); break;
            case 1: out.grpo.push_back(r); break;
            default: out.bench.push_back(r); break;
        }
    }
    return out;
}

std::vector<Violation> validate(const std::vector<Record>& records,
                                const std::vector<std::string>& languages) {
    std::vector<Violation> out;
    const std::set<std::string> langs(languages.begin(), languages.end());
    std::unordered_set<std::string> ids;
    std::unordered_set<std::string> questions;  // keyed by language + text

    for (const auto& r : records) {
        if (!ids.insert(r.id).second)
            out.push_back({"duplicate-id", r.id, "id '" + r.id + "' appears more than once"});
        if (!questions.insert(r.language + "\x1f" + r.question).second)
            out.push_back({"duplicate-question", r.id,
                           "question duplicated within language '" + r.language + "'"});
        if (r.question.empty())
            out.push_back({"empty-field", r.id, "question is empty"});
        if (r.answer.empty()) out.push_back({"empty-field", r.id, "answer is empty"});
        if (!langs.empty() && !langs.count(r.language))
            out.push_back({"unknown-language", r.id,
                           "language '" + r.language + "' is not in the configured set"});
    }
    return out;
}

// ---- run configuration ----

void RunConfig::validate() const {
    if (gate_probability < 0.0 || gate_probability > 1.0)
        throw ConfigError("gate_probability must lie in [0, 1]");
    if (grpo.group_size < 2) throw ConfigError("grpo group_size must be >= 2");
    if (grpo.clip_eps <= 0.0) throw ConfigError("grpo clip_eps must be positive");
    if (grpo.kl_beta < 0.0) throw ConfigError("grpo kl_beta must be nonnegative");
    if (grpo.max_completion_tokens < 1)
        throw ConfigError("grpo max_completion_tokens must be >= 1");
    if (grpo.temperature < 0.0) throw ConfigError("grpo temperature must be nonnegative");
    if (optimizer.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (optimizer.epochs < 1) throw ConfigError("epochs must be >= 1");
    if (optimizer.warmup_ratio < 0.0 || optimizer.warmup_ratio > 1.0)
        throw ConfigError("warmup_ratio must lie in [0, 1]");
    if (rewards.w_format < 0 || rewards.w_answer < 0 || rewards.w_lang < 0)
        throw ConfigError("reward weights must be nonnegative");
    if (rewards.w_format + rewards.w_answer + rewards.w_lang <= 0)
        throw ConfigError("at least one reward weight must be positive");
    if (rewards.language_scope != "full_output" && rewards.language_scope != "reasoning_only")
        throw ConfigError("language_scope must be full_output or reasoning_only");
    if (rewards.answer_comparator != "exact_normalized" &&
        rewards.answer_comparator != "integer_equal")
        throw ConfigError("answer_comparator must be exact_normalized or integer_equal");
    if (sft.reduction != "sum" && sft.reduction != "mean")
        throw ConfigError("sft reduction must be sum or mean");
    if (sft.mask != "target_only" && sft.mask != "full_sequence")
        throw ConfigError("sft mask must be target_only or full_sequence");
    if (eval.temperature < 0.0) throw ConfigError("eval temperature must be nonnegative");
    if (eval.max_new_tokens < 1) throw ConfigError("eval max_new_tokens must be >= 1");
    if (translator_policy != "uniform") {
        if (std::find(languages.begin(), languages.end(), translator_policy) ==
            languages.end())
            throw ConfigError("translator_policy must be 'uniform' or a configured language");
    }
    policy.validate();
}

namespace {

struct IniEntry {
    std::string section;
    std::string key;
    std::string value;
    long line;
};

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<IniEntry> parse_ini(const std::string& text) {
    std::vector<IniEntry> entries;
    std::istringstream in(text);
    std::string line;
    std::string section;
    long line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ParseError("unterminated section header", line_number);
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected key = value", line_number);
        entries.push_back({section, trim(t.substr(0, eq)), trim(t.substr(eq + 1)), line_number});
    }
    return entries;
}

double to_double(const IniEntry& e) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(e.value, &pos);
        if (pos != e.value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad numeric value for " + e.section + "." + e.key + ": '" +
                          e.value + "'");
    }
}

int to_int(const IniEntry& e) {
    const double v = to_double(e);
    if (v != std::floor(v)) throw ConfigError(e.section + "." + e.key + " must be an integer");
    return static_cast<int>(v);
}

std::uint64_t to_u64(const IniEntry& e) {
    try {
        return std::stoull(e.value);
    } catch (const std::exception&) {
        throw ConfigError("bad seed value for " + e.section + "." + e.key);
    }
}

std::vector<std::string> to_list(const IniEntry& e) {
    std::vector<std::string> out;
    std::istringstream in(e.value);
    std::string item;
    while (std::getline(in, item, ',')) {
        const std::string t = trim(item);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
    RunConfig c;
    for (const auto& e : parse_ini(text)) {
        const std::string where = e.section + "." + e.key;
        if (e.section == "run") {
            if (e.key == "seed") c.seed = to_u64(e);
            else if (e.key == "languages") c.languages = to_list(e);
            else if (e.key == "translator_policy") c.translator_policy = e.value;
            else throw ConfigError("unknown key " + where);
        } else if (e.section == "optimizer") {
            auto& o = c.optimizer;
            if (e.key == "lr") o.lr = to_double(e);
            else if (e.key == "min_lr") o.min_lr = to_double(e);
            else if (e.key == "weight_decay") o.weight_decay = to_double(e);
            else if (e.key == "beta1") o.beta1 = to_double(e);
            else if (e.key == "beta2") o.beta2 = to_double(e);
            else if (e.key == "warmup_ratio") o.warmup_ratio = to_double(e);
            else if (e.key == "batch_size") o.batch_size = to_int(e);
            else if (e.key == "epochs") o.epochs = to_int(e);
            else throw ConfigError("unknown key " + where);
        } else if (e.section == "grpo") {
            auto& g = c.grpo;
            if (e.key == "group_size") g.group_size = to_int(e);
            else if (e.key == "max_completion_tokens") g.max_completion_tokens = to_int(e);
            else if (e.key == "max_steps") g.max_steps = to_int(e);
            else if (e.key == "clip_eps") g.clip_eps = to_double(e);
            else if (e.key == "kl_beta") g.kl_beta = to_double(e);
            else if (e.key == "temperature") g.temperature = to_double(e);
            else throw ConfigError("unknown key " + where);
        } else if (e.section == "bridge") {
            if (e.key == "gate_probability") c.gate_probability = to_double(e);
            else throw ConfigError("unknown key " + where);
        } else if (e.section == "rewards") {
            auto& r = c.rewards;
            if (e.key == "w_format") r.w_format = to_double(e);
            else if (e.key == "w_answer") r.w_answer = to_double(e);
            else if (e.key == "w_lang") r.w_lang = to_double(e);
            else if (e.key == "language_scope") r.language_scope = e.value;
            else if (e.key == "answer_comparator") r.answer_comparator = e.value;
            else throw ConfigError("unknown key " + where);
        } else if (e.section == "sft") {
            if (e.key == "reduction") c.sft.reduction = e.value;
            else if (e.key == "mask") c.sft.mask = e.value;
            else throw ConfigError("unknown key " + where);
        } else if (e.section == "eval") {
            if (e.key == "max_new_tokens") c.eval.max_new_tokens = to_int(e);
            else if (e.key == "temperature") c.eval.temperature = to_double(e);
            else throw ConfigError("unknown key " + where);
        } else if (e.section == "policy") {
            auto& p = c.policy;
            if (e.key == "vocab_size") p.vocab_size = to_int(e);
            else if (e.key == "model_dim") p.model_dim = to_int(e);
            else if (e.key == "n_layers") p.n_layers = to_int(e);
            else if (e.key == "n_heads") p.n_heads = to_int(e);
            else if (e.key == "context_length") p.context_length = to_int(e);
            else if (e.key == "init_std") p.init_std = to_double(e);
            else if (e.key == "seed") p.seed = to_u64(e);
            else if (e.key == "temperature") p.temperature = to_double(e);
            else throw ConfigError("unknown key " + where);
        } else {
            throw ConfigError("unknown section [" + e.section + "]");
        }
    }

    if (const char* env_seed = std::getenv("BRIDGE_SEED")) {
        try {
            c.seed = std::stoull(env_seed);
        } catch (const std::exception&) {
            throw ConfigError("BRIDGE_SEED is not a valid integer");
        }
    }
    c.validate();
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_run_config(buffer.str());
}

std::string dump_run_config(const RunConfig& c) {
    std::ostringstream out;
    out << "[run]\n";
    out << "seed = " << c.seed << "\n";
    out << "languages = ";
    for (std::size_t i = 0; i < c.languages.size(); ++i)
        out << (i ? "," : "") << c.languages[i];
    out << "\n";
    out << "translator_policy = " << c.translator_policy << "\n\n";
    out << "[optimizer]\n";
    out << "lr = " << c.optimizer.lr << "\n";
    out << "min_lr = " << c.optimizer.min_lr << "\n";
    out << "weight_decay = " << c.optimizer.weight_decay << "\n";
    out << "beta1 = " << c.optimizer.beta1 << "\n";
    out << "beta2 = " << c.optimizer.beta2 << "\n";
    out << "warmup_ratio = " << c.optimizer.warmup_ratio << "\n";
    out << "batch_size = " << c.optimizer.batch_size << "\n";
    out << "epochs = " << c.optimizer.epochs << "\n\n";
    out << "[grpo]\n";
    out << "group_size = " << c.grpo.group_size << "\n";
    out << "max_completion_tokens = " << c.grpo.max_completion_tokens << "\n";
    out << "max_steps = " << c.grpo.max_steps << "\n";
    out << "clip_eps = " << c.grpo.clip_eps << "\n";
    out << "kl_beta = " << c.grpo.kl_beta << "\n";
    out << "temperature = " << c.grpo.temperature << "\n\n";
    out << "[bridge]\n";
    out << "gate_probability = " << c.gate_probability << "\n\n";
    out << "[rewards]\n";
    out << "w_format = " << c.rewards.w_format << "\n";
    out << "w_answer = " << c.rewards.w_answer << "\n";
    out << "w_lang = " << c.rewards.w_lang << "\n";
    out << "language_scope = " << c.rewards.language_scope << "\n";
    out << "answer_comparator = " << c.rewards.answer_comparator << "\n\n";
    out << "[sft]\n";
    out << "reduction = " << c.sft.reduction << "\n";
    out << "mask = " << c.sft.mask << "\n\n";
    out << "[eval]\n";
    out << "max_new_tokens = " << c.eval.max_new_tokens << "\n";
    out << "temperature = " << c.eval.temperature << "\n\n";
    out << "[policy]\n";
    out << "vocab_size = " << c.policy.vocab_size << "\n";
    out << "model_dim = " << c.policy.model_dim << "\n";
    out << "n_layers = " << c.policy.n_layers << "\n";
    out << "n_heads = " << c.policy.n_heads << "\n";
    out << "context_length = " << c.policy.context_length << "\n";
    out << "init_std = " << c.policy.init_std << "\n";
    out << "seed = " << c.policy.seed << "\n";
    out << "temperature = " << c.policy.temperature << "\n";
    return out.str();
}

}  // namespace bridge
