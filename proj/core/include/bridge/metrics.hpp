#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bridge/error.hpp"

namespace bridge {

// One scored model output. detected_language may be the identifier's
// UNDETERMINED value, which counts as a mismatch.
struct EvalRecord {
    std::string record_id;
    std::string target_language;
    std::string detected_language;
    bool answer_correct = false;
    std::optional<bool> assoc;
    std::string resource_group;  // "high"/"medium"/"low", empty when unknown
    std::string country;
};

// Fraction of outputs detected in the target language (language accuracy).
double a_lang(const std::vector<EvalRecord>& records);

// Fraction of outputs that are simultaneously language-consistent and
// answer-correct.
double a_joint(const std::vector<EvalRecord>& records);

double answer_accuracy(const std::vector<EvalRecord>& records);
double mismatch_rate(const std::vector<EvalRecord>& records);

// Mean answer-error rates on associated and non-associated pairs. Both
// classes must be populated.
std::pair<double, double> error_rates(const std::vector<EvalRecord>& records);

// Factual recall score: (3/2) * (1/(mu_a + mu_n + 1) - 1/3). The 3/2 factor
// is the one that actually normalizes the range to [0, 1].
double frs(double mu_assoc, double mu_non_assoc);

// Knowledge transferability score: 2 * (1/(|mu_a - mu_n| + 1) - 1/2).
double kts(double mu_assoc, double mu_non_assoc);

// Harmonic mean of FRS and KTS; defined as 0 at FRS = KTS = 0.
double xfakt(double frs_value, double kts_value);

struct CellStats {
    std::size_t count = 0;
    double a_lang = 0.0;
    double a_joint = 0.0;
    double answer_accuracy = 0.0;
    double mismatch_rate = 0.0;
};

struct GroupStats {
    std::size_t count_assoc = 0;
    std::size_t count_non_assoc = 0;
    std::optional<double> mu_assoc;
    std::optional<double> mu_non_assoc;
    std::optional<double> frs;
    std::optional<double> kts;
    std::optional<double> xfakt;
};

struct MetricsReport {
    CellStats overall;
    std::map<std::pair<std::string, std::string>, CellStats> per_pair;  // (language, country)
    std::map<std::string, GroupStats> per_group;                        // resource group
};

// Overall, per-(language, country), and per-resource-group rollups.
MetricsReport aggregate(const std::vector<EvalRecord>& records);

// Rendering: rates scaled to 0-100 with one decimal, raw counts alongside.
std::string report_to_json(const MetricsReport& report);
std::string report_to_csv(const MetricsReport& report);

// EvalRecord JSONL, the eval command's raw output.
std::string eval_record_to_json_line(const EvalRecord& r);
EvalRecord eval_record_from_json_line(const std::string& line, long line_number = -1);
void save_eval_records(const std::vector<EvalRecord>& records, const std::string& path);
std::vector<EvalRecord> load_eval_records(const std::string& path);

}  // namespace bridge
