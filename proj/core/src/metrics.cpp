#include "bridge/metrics.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace bridge {

namespace {

using nlohmann::json;

bool lang_match(const EvalRecord& r) { return r.detected_language == r.target_language; }

void require_nonempty(const std::vector<EvalRecord>& records, const char* op) {
    if (records.empty()) throw ContractError(std::string(op) + " on an empty record set");
}

double round1(double rate_0_100) { return std::round(rate_0_100 * 10.0) / 10.0; }

double scaled(double rate) { return round1(rate * 100.0); }

}  // namespace

double a_lang(const std::vector<EvalRecord>& records) {
    require_nonempty(records, "a_lang");
    std::size_t hits = 0;
    for (const auto& r : records) hits += lang_match(r) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(records.size());
}

double a_joint(const std::vector<EvalRecord>& records) {
    require_nonempty(records, "a_joint");
    std::size_t hits = 0;
    for (const auto& r : records) hits += (lang_match(r) && r.answer_correct) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(records.size());
}

double answer_accuracy(const std::vector<EvalRecord>& records) {
    require_nonempty(records, "answer_accuracy");
    std::size_t hits = 0;
    for (const auto& r : records) hits += r.answer_correct ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(records.size());
}

double mismatch_rate(const std::vector<EvalRecord>& records) {
    return 1.0 - a_lang(records);
}

std::pair<double, double> error_rates(const std::vector<EvalRecord>& records) {
    std::size_t n_assoc = 0, n_non = 0, err_assoc = 0, err_non = 0;
    for (const auto& r : records) {
        if (!r.assoc.has_value()) continue;
        if (*r.assoc) {
            ++n_assoc;
            err_assoc += r.answer_correct ? 0 : 1;
        } else {
            ++n_non;
            err_non += r.answer_correct ? 0 : 1;
        }
    }
    if (n_assoc == 0) throw ContractError("error_rates: associated class is empty");
    if (n_non == 0) throw ContractError("error_rates: non-associated class is empty");
    return {static_cast<double>(err_assoc) / static_cast<double>(n_assoc),
            static_cast<double>(err_non) / static_cast<double>(n_non)};
}

namespace {

void require_unit(double mu, const char* name) {
    if (!(mu >= 0.0 && mu <= 1.0))
        throw ContractError(std::string(name) + " must lie in [0, 1], got " +
                            std::to_string(mu));
}

}  // namespace

double frs(double mu_assoc, double mu_non_assoc) {
    require_unit(mu_assoc, "mu_assoc");
    require_unit(mu_non_assoc, "mu_non_assoc");
    return 1.5 * (1.0 / (mu_assoc + mu_non_assoc + 1.0) - 1.0 / 3.0);
}

double kts(double mu_assoc, double mu_non_assoc) {
    require_unit(mu_assoc, "mu_assoc");
    require_unit(mu_non_assoc, "mu_non_assoc");
    return 2.0 * (1.0 / (std::abs(mu_assoc - mu_non_assoc) + 1.0) - 0.5);
}

double xfakt(double frs_value, double kts_value) {
    if (frs_value + kts_value == 0.0) return 0.0;
    return 2.0 * frs_value * kts_value / (frs_value + kts_value);
}

namespace {

CellStats cell_from(const std::vector<EvalRecord>& records) {
    CellStats c;
    c.count = records.size();
    c.a_lang = a_lang(records);
    c.a_joint = a_joint(records);
    c.answer_accuracy = answer_accuracy(records);
    c.mismatch_rate = 1.0 - c.a_lang;
    return c;
}

}  // namespace

MetricsReport aggregate(const std::vector<EvalRecord>& records) {
    MetricsReport report;
    if (records.empty()) return report;

    report.overall = cell_from(records);

    std::map<std::pair<std::string, std::string>, std::vector<EvalRecord>> pairs;
    std::map<std::string, std::vector<EvalRecord>> groups;
    for (const auto& r : records) {
        pairs[{r.target_language, r.country}].push_back(r);
        if (!r.resource_group.empty() && r.assoc.has_value())
            groups[r.resource_group].push_back(r);
    }
    for (const auto& [key, rs] : pairs) report.per_pair.emplace(key, cell_from(rs));

    for (const auto& [label, rs] : groups) {
        GroupStats g;
        std::vector<EvalRecord> assoc_rs, non_rs;
        for (const auto& r : rs)
            (*r.assoc ? assoc_rs : non_rs).push_back(r);
        g.count_assoc = assoc_rs.size();
        g.count_non_assoc = non_rs.size();
        if (!assoc_rs.empty()) g.mu_assoc = 1.0 - answer_accuracy(assoc_rs);
        if (!non_rs.empty()) g.mu_non_assoc = 1.0 - answer_accuracy(non_rs);
        if (g.mu_assoc && g.mu_non_assoc) {
            g.frs = frs(*g.mu_assoc, *g.mu_non_assoc);
            g.kts = kts(*g.mu_assoc, *g.mu_non_assoc);
            g.xfakt = xfakt(*g.frs, *g.kts);
        }
        report.per_group.emplace(label, g);
    }
    return report;
}

namespace {

json cell_to_json(const CellStats& c) {
    return json{{"count", c.count},
                {"a_lang", scaled(c.a_lang)},
                {"a_joint", scaled(c.a_joint)},
                {"answer_accuracy", scaled(c.answer_accuracy)},
                {"mismatch_rate", scaled(c.mismatch_rate)}};
}

json opt_scaled(const std::optional<double>& v) {
    if (!v) return nullptr;
    return scaled(*v);
}

}  // namespace

std::string report_to_json(const MetricsReport& report) {
    json j;
    j["overall"] = cell_to_json(report.overall);
    json pairs = json::array();
    for (const auto& [key, cell] : report.per_pair) {
        json p = cell_to_json(cell);
        p["language"] = key.first;
        p["country"] = key.second;
        pairs.push_back(std::move(p));
    }
    j["per_pair"] = std::move(pairs);
    json groups = json::object();
    for (const auto& [label, g] : report.per_group) {
        groups[label] = json{{"count_assoc", g.count_assoc},
                             {"count_non_assoc", g.count_non_assoc},
                             {"mu_assoc", opt_scaled(g.mu_assoc)},
                             {"mu_non_assoc", opt_scaled(g.mu_non_assoc)},
                             {"frs", opt_scaled(g.frs)},
                             {"kts", opt_scaled(g.kts)},
                             {"xfakt", opt_scaled(g.xfakt)}};
    }
    j["per_group"] = std::move(groups);
    return j.dump(2);
}

std::string report_to_csv(const MetricsReport& report) {
    std::ostringstream out;
    out << "section,language,country,group,count,a_lang,a_joint,answer_accuracy,"
           "mismatch_rate,mu_assoc,mu_non_assoc,frs,kts,xfakt\n";
    auto num = [](double v) {
        std::ostringstream s;
        s << v;
        return s.str();
    };
    auto opt = [&](const std::optional<double>& v) { return v ? num(scaled(*v)) : ""; };

    const CellStats& o = report.overall;
    out << "overall,,,," << o.count << "," << num(scaled(o.a_lang)) << ","
        << num(scaled(o.a_joint)) << "," << num(scaled(o.answer_accuracy)) << ","
        << num(scaled(o.mismatch_rate)) << ",,,,,\n";
    for (const auto& [key, c] : report.per_pair) {
        out << "pair," << key.first << "," << key.second << ",," << c.count << ","
            << num(scaled(c.a_lang)) << "," << num(scaled(c.a_joint)) << ","
            << num(scaled(c.answer_accuracy)) << "," << num(scaled(c.mismatch_rate))
            << ",,,,,\n";
    }
    for (const auto& [label, g] : report.per_group) {
        out << "group,,," << label << "," << (g.count_assoc + g.count_non_assoc)
            << ",,,,," << opt(g.mu_assoc) << "," << opt(g.mu_non_assoc) << "," << opt(g.frs)
            << "," << opt(g.kts) << "," << opt(g.xfakt) << "\n";
    }
    return out.str();
}

std::string eval_record_to_json_line(const EvalRecord& r) {
    json j;
    j["record_id"] = r.record_id;
    j["target_language"] = r.target_language;
    j["detected_language"] = r.detected_language;
    j["answer_correct"] = r.answer_correct;
    if (r.assoc.has_value()) j["assoc"] = *r.assoc;
    if (!r.resource_group.empty()) j["resource_group"] = r.resource_group;
    if (!r.country.empty()) j["country"] = r.country;
    return j.dump();
}

EvalRecord eval_record_from_json_line(const std::string& line, long line_number) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(e.what(), line_number);
    }
    EvalRecord r;
    r.record_id = j.at("record_id").get<std::string>();
    r.target_language = j.at("target_language").get<std::string>();
    r.detected_language = j.at("detected_language").get<std::string>();
    r.answer_correct = j.at("answer_correct").get<bool>();
    if (j.contains("assoc")) r.assoc = j.at("assoc").get<bool>();
    if (j.contains("resource_group")) r.resource_group = j.at("resource_group").get<std::string>();
    if (j.contains("country")) r.country = j.at("country").get<std::string>();
    return r;
}

void save_eval_records(const std::vector<EvalRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path + " for writing");
    for (const auto& r : records) out << eval_record_to_json_line(r) << "\n";
}

std::vector<EvalRecord> load_eval_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::vector<EvalRecord> records;
    std::string line;
    long line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        records.push_back(eval_record_from_json_line(line, line_number));
    }
    return records;
}

}  // namespace bridge
