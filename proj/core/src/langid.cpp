#include "bridge/langid.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include <json.hpp>

#include "bridge/tokens.hpp"

namespace bridge {

namespace {

void erase_all(std::string& s, const std::string& needle) {
    std::size_t pos = 0;
    while ((pos = s.find(needle, pos)) != std::string::npos) s.erase(pos, needle.size());
}

void count_ngrams(const std::string& text, int n,
                  std::unordered_map<std::string, long>& counts, long& total) {
    if (text.size() < static_cast<std::size_t>(n)) return;
    for (std::size_t i = 0; i + n <= text.size(); ++i) {
        ++counts[text.substr(i, static_cast<std::size_t>(n))];
        ++total;
    }
}

}  // namespace

std::string Identifier::preprocess(const std::string& text) const {
    std::string s = text;
    if (config_.strip_markers) {
        erase_all(s, tok::kStepMark);
        erase_all(s, tok::kAnswerMark);
    }
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (unsigned char c : s) {
        if (std::isdigit(c) || (c < 128 && std::ispunct(c))) continue;
        if (std::isspace(c)) {
            pending_space = true;
            continue;
        }
        if (pending_space && !out.empty()) out.push_back(' ');
        pending_space = false;
        out.push_back(static_cast<char>(c));
    }
    return out;
}

Identifier Identifier::train(const std::map<std::string, std::vector<std::string>>& corpora,
                             IdentifierConfig config) {
    if (corpora.size() < 2)
        throw DataError("identifier needs at least 2 languages, got " +
                        std::to_string(corpora.size()));

    Identifier id;
    id.config_ = config;

    // Shared event space per order: every n-gram seen in any corpus.
    std::array<std::set<std::string>, 3> event_space;
    struct LangCounts {
        std::string code;
        std::array<std::unordered_map<std::string, long>, 3> counts;
        std::array<long, 3> totals{0, 0, 0};
    };
    std::vector<LangCounts> all;

    for (const auto& [code, texts] : corpora) {
        if (texts.empty()) throw DataError("empty corpus for language '" + code + "'");
        LangCounts lc;
        lc.code = code;
        for (const auto& text : texts) {
            const std::string clean = id.preprocess(text);
            for (int n = 1; n <= 3; ++n)
                count_ngrams(clean, n, lc.counts[n - 1], lc.totals[n - 1]);
        }
        for (int n = 0; n < 3; ++n)
            for (const auto& [gram, c] : lc.counts[n]) {
                (void)c;
                event_space[n].insert(gram);
            }
        all.push_back(std::move(lc));
    }

    const double log_prior = -std::log(static_cast<double>(corpora.size()));
    for (auto& lc : all) {
        LanguageProfile profile;
        profile.code = lc.code;
        profile.log_prior = log_prior;
        for (int n = 0; n < 3; ++n) {
            // Laplace smoothing over |events| + 1 outcomes (the +1 is unseen).
            const double denom =
                static_cast<double>(lc.totals[n]) + static_cast<double>(event_space[n].size()) + 1.0;
            NgramTable& table = profile.tables[n];
            table.oov_loglik = std::log(1.0 / denom);
            for (const auto& gram : event_space[n]) {
                const auto it = lc.counts[n].find(gram);
                const long c = it == lc.counts[n].end() ? 0 : it->second;
                table.loglik.emplace(gram, std::log((static_cast<double>(c) + 1.0) / denom));
            }
        }
        id.profiles_.push_back(std::move(profile));
    }
    return id;
}

IdentifyResult Identifier::identify(const std::string& text) const {
    IdentifyResult result;
    const std::string clean = preprocess(text);
    if (clean.size() < config_.min_length) return result;  // UNDETERMINED

    std::vector<double> scores(profiles_.size());
    for (std::size_t k = 0; k < profiles_.size(); ++k) {
        double s = profiles_[k].log_prior;
        for (int n = 1; n <= 3; ++n) {
            if (clean.size() < static_cast<std::size_t>(n)) continue;
            const NgramTable& table = profiles_[k].tables[n - 1];
            for (std::size_t i = 0; i + n <= clean.size(); ++i)
                s += table.score(clean.substr(i, static_cast<std::size_t>(n)));
        }
        scores[k] = s;
    }

    std::size_t best = 0, second = 1;
    if (scores[second] > scores[best]) std::swap(best, second);
    for (std::size_t k = 2; k < scores.size(); ++k) {
        if (scores[k] > scores[best]) {
            second = best;
            best = k;
        } else if (scores[k] > scores[second]) {
            second = k;
        }
    }
    const double margin = scores[best] - scores[second];
    if (margin < config_.margin_threshold) return result;  // UNDETERMINED

    result.language = profiles_[best].code;
    result.margin = margin;
    return result;
}

bool Identifier::covers(const std::string& code) const {
    return std::any_of(profiles_.begin(), profiles_.end(),
                       [&](const LanguageProfile& p) { return p.code == code; });
}

std::string Identifier::to_json() const {
    nlohmann::json j;
    j["format"] = "bridge-langid";
    j["version"] = 1;
    j["min_length"] = config_.min_length;
    j["margin_threshold"] = config_.margin_threshold;
    j["strip_markers"] = config_.strip_markers;
    nlohmann::json profiles = nlohmann::json::array();
    for (const auto& p : profiles_) {
        nlohmann::json jp;
        jp["code"] = p.code;
        jp["log_prior"] = p.log_prior;
        nlohmann::json tables = nlohmann::json::array();
        for (const auto& t : p.tables) {
            nlohmann::json jt;
            jt["oov_loglik"] = t.oov_loglik;
            nlohmann::json entries = nlohmann::json::object();
            std::vector<std::string> keys;
            keys.reserve(t.loglik.size());
            for (const auto& [gram, ll] : t.loglik) {
                (void)ll;
                keys.push_back(gram);
            }
            std::sort(keys.begin(), keys.end());
            for (const auto& k : keys) entries[k] = t.loglik.at(k);
            jt["loglik"] = std::move(entries);
            tables.push_back(std::move(jt));
        }
        jp["tables"] = std::move(tables);
        profiles.push_back(std::move(jp));
    }
    j["profiles"] = std::move(profiles);
    return j.dump();
}

Identifier Identifier::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("identifier: ") + e.what());
    }
    if (j.value("format", "") != "bridge-langid")
        throw SchemaError("format", "not an identifier profile dump");

    Identifier id;
    id.config_.min_length = j.at("min_length").get<std::size_t>();
    id.config_.margin_threshold = j.at("margin_threshold").get<double>();
    id.config_.strip_markers = j.at("strip_markers").get<bool>();
    for (const auto& jp : j.at("profiles")) {
        LanguageProfile p;
        p.code = jp.at("code").get<std::string>();
        p.log_prior = jp.at("log_prior").get<double>();
        int n = 0;
        for (const auto& jt : jp.at("tables")) {
            if (n >= 3) throw SchemaError("tables", "more than 3 n-gram tables");
            p.tables[n].oov_loglik = jt.at("oov_loglik").get<double>();
            for (const auto& [gram, ll] : jt.at("loglik").items())
                p.tables[n].loglik.emplace(gram, ll.get<double>());
            ++n;
        }
        id.profiles_.push_back(std::move(p));
    }
    if (id.profiles_.size() < 2) throw SchemaError("profiles", "fewer than 2 profiles");
    return id;
}

}  // namespace bridge
