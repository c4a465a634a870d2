// Command surface tying generation, training, evaluation, judging, and
// reporting into reproducible runs. Exit codes: 0 success, 1 internal error,
// 2 usage or contract error.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bridge/checkpoint.hpp"
#include "bridge/corpus.hpp"
#include "bridge/eval.hpp"
#include "bridge/judge.hpp"
#include "bridge/langid.hpp"
#include "bridge/metrics.hpp"
#include "bridge/synthlingua.hpp"
#include "bridge/trainers.hpp"
#include "manifest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string> g_argv;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw bridge::DataError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw bridge::DataError("cannot write " + path);
    out << text;
}

// --out fallback: flag, then BRIDGE_OUT_DIR, then error.
std::string resolve_out_dir(std::string flag_value) {
    if (flag_value.empty()) {
        if (const char* env = std::getenv("BRIDGE_OUT_DIR")) flag_value = env;
    }
    if (flag_value.empty())
        throw bridge::ConfigError("no output directory: pass --out or set BRIDGE_OUT_DIR");
    fs::create_directories(flag_value);
    return flag_value;
}

std::string resolve_data_dir(std::string flag_value) {
    if (flag_value.empty()) {
        if (const char* env = std::getenv("BRIDGE_DATA_DIR")) flag_value = env;
    }
    if (flag_value.empty())
        throw bridge::ConfigError("no data directory: pass --data or set BRIDGE_DATA_DIR");
    return flag_value;
}

bridge::SynthWorld load_world(const std::string& spec, std::uint64_t seed) {
    if (spec == "default") {
        bridge::WorldConfig wc;
        wc.seed = seed;
        return bridge::make_world(wc);
    }
    return bridge::SynthWorld::from_json(read_file(spec));
}

std::map<std::string, std::string> resource_group_map(const bridge::SynthWorld& world) {
    std::map<std::string, std::string> groups;
    for (const auto& lang : world.languages) groups[lang.code] = lang.resource_group;
    return groups;
}

// ---- gen-data ----

int cmd_gen_data(const std::string& world_spec, int n, std::uint64_t seed,
                 const std::string& out_flag, const std::string& kind,
                 const std::vector<double>& fractions, double dominant_share) {
    const std::string out = resolve_out_dir(out_flag);
    const auto world = load_world(world_spec, seed);

    std::vector<bridge::TaskRecord> tasks;
    if (kind == "factual")
        tasks = bridge::generate_factual(world, n, seed);
    else if (kind == "math")
        tasks = bridge::generate_math(world, n, world.language_codes(), seed);
    else if (kind == "pretrain")
        tasks = bridge::generate_pretrain(world, n, dominant_share, seed);
    else
        throw bridge::ConfigError("unknown --kind '" + kind + "'");
    const auto records = bridge::to_records(tasks);

    const auto violations = bridge::validate(records, world.language_codes());
    if (!violations.empty()) {
        for (const auto& v : violations)
            std::cerr << "violation [" << v.kind << "] " << v.record_id << ": " << v.message
                      << "\n";
        throw bridge::DataError("generated corpus failed validation with " +
                                std::to_string(violations.size()) + " violations");
    }

    bridge::save_jsonl(records, out + "/corpus.jsonl");
    write_file(out + "/world.json", world.to_json());

    const auto id = bridge::Identifier::train(bridge::identifier_corpora(world, 40, seed + 1));
    write_file(out + "/identifier.json", id.to_json());

    bridge::SplitSpec split_spec;
    if (fractions.size() == 3) {
        split_spec.sft = fractions[0];
        split_spec.grpo = fractions[1];
        split_spec.bench = fractions[2];
    }
    split_spec.seed = seed;
    const auto parts = bridge::split(records, split_spec);
    bridge::save_jsonl(parts.sft, out + "/sft.jsonl");
    bridge::save_jsonl(parts.grpo, out + "/grpo.jsonl");
    bridge::save_jsonl(parts.bench, out + "/bench.jsonl");

    bridgecli::RunManifest manifest;
    manifest.command = "gen-data";
    manifest.argv = g_argv;
    manifest.seed = seed;
    for (const char* f : {"corpus.jsonl", "world.json", "identifier.json", "sft.jsonl",
                          "grpo.jsonl", "bench.jsonl"}) {
        manifest.artifacts.push_back(out + "/" + f);
        manifest.input_hashes.emplace_back(f, bridgecli::file_hash(out + "/" + f));
    }
    manifest.write(out + "/manifest.json");

    std::cout << "wrote " << records.size() << " records to " << out << " (sft "
              << parts.sft.size() << ", grpo " << parts.grpo.size() << ", bench "
              << parts.bench.size() << ")\n";
    return 0;
}

// ---- train ----

template <typename S>
void run_train(bridge::RunKind kind, const bridge::RunConfig& config,
               const std::vector<bridge::Record>& sft_data,
               const std::vector<bridge::Record>& grpo_data,
               const bridge::Translator* translator, const bridge::Identifier* identifier,
               std::optional<bridge::CheckpointData> init, const std::string& out) {
    std::optional<bridge::Policy<S>> initial;
    if (init.has_value()) initial = bridge::from_checkpoint<S>(*init);

    auto result = bridge::train<S>(kind, config, sft_data, grpo_data, translator, identifier,
                                   std::move(initial));

    bridge::save_checkpoint(bridge::to_checkpoint(result.policy), out + "/checkpoint.json");
    std::ofstream log(out + "/training_log.jsonl");
    for (const auto& entry : result.logs)
        log << bridge::step_log_to_json_line(entry) << "\n";
    std::cout << "trained " << result.logs.size() << " steps; checkpoint at " << out
              << "/checkpoint.json\n";
}

int cmd_train(const std::string& mode, const std::string& config_path,
              const std::string& data_flag, const std::string& out_flag,
              const std::string& init_checkpoint, const std::string& precision) {
    const std::string out = resolve_out_dir(out_flag);
    const std::string data = resolve_data_dir(data_flag);
    const bridge::RunKind kind = bridge::run_kind_from_string(mode);

    bridge::RunConfig config =
        config_path.empty() ? bridge::RunConfig{} : bridge::load_run_config(config_path);

    const std::string world_path = data + "/world.json";
    const auto world = bridge::SynthWorld::from_json(read_file(world_path));
    if (config.languages.empty()) config.languages = world.language_codes();

    // mode-appropriate splits must exist before any step runs
    const std::string sft_path = data + "/sft.jsonl";
    const std::string grpo_path = data + "/grpo.jsonl";
    std::vector<bridge::Record> sft_data, grpo_data;
    if (kind != bridge::RunKind::Grpo) {
        if (!fs::exists(sft_path))
            throw bridge::ConfigError("missing SFT split " + sft_path + " for --mode " + mode);
        sft_data = bridge::load_jsonl(sft_path);
    }
    if (kind != bridge::RunKind::Sft) {
        if (!fs::exists(grpo_path))
            throw bridge::ConfigError("missing GRPO split " + grpo_path + " for --mode " +
                                      mode);
        grpo_data = bridge::load_jsonl(grpo_path);
    }

    const bridge::WorldTranslator translator(world);
    const auto identifier =
        bridge::Identifier::from_json(read_file(data + "/identifier.json"));

    std::optional<bridge::CheckpointData> init;
    if (!init_checkpoint.empty()) init = bridge::load_checkpoint(init_checkpoint);

    if (precision == "f64")
        run_train<double>(kind, config, sft_data, grpo_data, &translator, &identifier,
                          std::move(init), out);
    else if (precision == "f32")
        run_train<float>(kind, config, sft_data, grpo_data, &translator, &identifier,
                         std::move(init), out);
    else
        throw bridge::ConfigError("--precision must be f32 or f64");

    bridgecli::RunManifest manifest;
    manifest.command = "train";
    manifest.argv = g_argv;
    manifest.seed = config.seed;
    manifest.config_snapshot = bridge::dump_run_config(config);
    for (const auto& path : {sft_path, grpo_path, world_path})
        if (fs::exists(path)) manifest.input_hashes.emplace_back(path, bridgecli::file_hash(path));
    manifest.artifacts = {out + "/checkpoint.json", out + "/training_log.jsonl"};
    manifest.write(out + "/manifest.json");
    return 0;
}

// ---- eval ----

template <typename S>
void run_eval(const bridge::CheckpointData& ckpt, const std::vector<bridge::Record>& bench,
              const bridge::Identifier& id, const bridge::SynthWorld& world,
              const bridge::RunConfig& config, const std::string& out) {
    auto policy = bridge::from_checkpoint<S>(ckpt);
    const auto result = bridge::evaluate_policy<S>(policy, bench, id,
                                                   resource_group_map(world), config.eval,
                                                   config.rewards, config.seed);
    bridge::save_eval_records(result.records, out + "/eval_records.jsonl");

    std::ofstream outputs(out + "/outputs.jsonl");
    for (const auto& [record_id, text] : result.outputs) {
        json j;
        j["id"] = record_id;
        j["output"] = bridge::bytes_to_utf8(text);
        outputs << j.dump() << "\n";
    }

    const auto report = bridge::aggregate(result.records);
    write_file(out + "/report.json", bridge::report_to_json(report));
    write_file(out + "/report.csv", bridge::report_to_csv(report));
    std::cout << "evaluated " << result.records.size() << " records; A_lang "
              << bridge::a_lang(result.records) * 100.0 << ", A_joint "
              << bridge::a_joint(result.records) * 100.0 << " (0-100 scale)\n";
}

int cmd_eval(const std::string& checkpoint, const std::string& bench_path,
             const std::string& world_path, const std::string& identifier_path,
             const std::string& config_path, const std::string& out_flag) {
    const std::string out = resolve_out_dir(out_flag);
    const auto bench = bridge::load_jsonl(bench_path);
    if (bench.empty()) throw bridge::DataError("benchmark " + bench_path + " is empty");

    const auto world = bridge::SynthWorld::from_json(read_file(world_path));
    const auto id = bridge::Identifier::from_json(read_file(identifier_path));
    const bridge::RunConfig config =
        config_path.empty() ? bridge::RunConfig{} : bridge::load_run_config(config_path);

    const auto ckpt = bridge::load_checkpoint(checkpoint);
    if (ckpt.precision == "f64")
        run_eval<double>(ckpt, bench, id, world, config, out);
    else
        run_eval<float>(ckpt, bench, id, world, config, out);

    bridgecli::RunManifest manifest;
    manifest.command = "eval";
    manifest.argv = g_argv;
    manifest.seed = config.seed;
    manifest.input_hashes.emplace_back(checkpoint, bridgecli::file_hash(checkpoint));
    manifest.input_hashes.emplace_back(bench_path, bridgecli::file_hash(bench_path));
    manifest.artifacts = {out + "/eval_records.jsonl", out + "/outputs.jsonl",
                          out + "/report.json", out + "/report.csv"};
    manifest.write(out + "/manifest.json");
    return 0;
}

// ---- judge ----

int cmd_judge(const std::string& bench_path, const std::string& candidates_path,
              const std::string& endpoint_url, const std::string& model, bool mock,
              const std::string& identifier_path, const std::string& out_flag,
              int max_retries, int max_parallel, double timeout_seconds) {
    const std::string out = resolve_out_dir(out_flag);
    const auto bench = bridge::load_jsonl(bench_path);
    if (bench.empty()) throw bridge::DataError("benchmark " + bench_path + " is empty");

    // candidates: {"id": ..., "output": ...} per line
    std::map<std::string, std::string> candidates;
    {
        std::ifstream in(candidates_path);
        if (!in) throw bridge::DataError("cannot open " + candidates_path);
        std::string line;
        long line_number = 0;
        while (std::getline(in, line)) {
            ++line_number;
            if (line.empty()) continue;
            json j;
            try {
                j = json::parse(line);
            } catch (const json::parse_error& e) {
                throw bridge::ParseError(e.what(), line_number);
            }
            candidates[j.at("id").get<std::string>()] =
                bridge::utf8_to_bytes(j.at("output").get<std::string>());
        }
    }

    std::vector<bridge::JudgeRequest> requests;
    std::vector<std::string> ids;
    for (const auto& record : bench) {
        const auto it = candidates.find(record.id);
        if (it == candidates.end()) continue;
        const std::string& output = it->second;
        bridge::JudgeRequest req;
        req.question = record.question;
        req.reference_reasoning = record.reasoning;
        const auto answer_pos = output.find(bridge::tok::kAnswerMark);
        req.candidate_reasoning =
            answer_pos == std::string::npos ? output : output.substr(0, answer_pos);
        req.candidate_answer = bridge::extract_answer(output).value_or("");
        req.gold_answer = record.answer;
        req.language = record.language;
        requests.push_back(std::move(req));
        ids.push_back(record.id);
    }

    std::vector<bridge::JudgeVerdict> verdicts;
    if (mock) {
        const auto id = bridge::Identifier::from_json(read_file(identifier_path));
        verdicts.reserve(requests.size());
        for (const auto& req : requests) verdicts.push_back(bridge::mock_judge(req, id));
    } else {
        bridge::EndpointConfig endpoint;
        endpoint.base_url = endpoint_url;
        endpoint.model = model;
        endpoint.max_retries = max_retries;
        endpoint.max_parallel = max_parallel;
        endpoint.timeout_seconds = timeout_seconds;
        verdicts = bridge::judge_batch(requests, endpoint);
    }

    std::ofstream vout(out + "/verdicts.jsonl");
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        json j;
        j["id"] = ids[i];
        j["reasoning_score"] = verdicts[i].reasoning_score;
        j["language_mismatch"] = verdicts[i].language_mismatch;
        j["answer_correct"] = verdicts[i].answer_correct;
        vout << j.dump() << "\n";
    }

    bridgecli::RunManifest manifest;
    manifest.command = "judge";
    manifest.argv = g_argv;
    manifest.input_hashes.emplace_back(bench_path, bridgecli::file_hash(bench_path));
    manifest.input_hashes.emplace_back(candidates_path, bridgecli::file_hash(candidates_path));
    manifest.artifacts = {out + "/verdicts.jsonl"};
    manifest.write(out + "/manifest.json");

    std::cout << "judged " << verdicts.size() << " candidates\n";
    return 0;
}

// ---- report ----

struct CellSeries {
    std::vector<double> values;
    double mean() const {
        double total = 0.0;
        for (double v : values) total += v;
        return values.empty() ? 0.0 : total / static_cast<double>(values.size());
    }
    double standard_error() const {
        const std::size_t n = values.size();
        if (n < 2) return 0.0;
        const double m = mean();
        double var = 0.0;
        for (double v : values) var += (v - m) * (v - m);
        var /= static_cast<double>(n - 1);
        return std::sqrt(var / static_cast<double>(n));
    }
};

int cmd_report(const std::vector<std::string>& inputs, const std::string& format,
               const std::string& out_path) {
    if (inputs.empty()) throw bridge::ConfigError("report needs at least one --inputs file");

    // cell key -> metric -> series over seed runs
    std::map<std::string, std::map<std::string, CellSeries>> pair_cells;
    std::map<std::string, std::map<std::string, CellSeries>> group_cells;
    std::map<std::string, CellSeries> overall;
    const std::vector<std::string> pair_metrics = {"a_lang", "a_joint", "answer_accuracy",
                                                   "mismatch_rate"};
    const std::vector<std::string> group_metrics = {"mu_assoc", "mu_non_assoc", "frs", "kts",
                                                    "xfakt"};

    for (const auto& path : inputs) {
        const json j = json::parse(read_file(path));
        for (const auto& metric : pair_metrics)
            overall[metric].values.push_back(j.at("overall").at(metric).get<double>());
        for (const auto& cell : j.at("per_pair")) {
            const std::string key = cell.at("language").get<std::string>() + "," +
                                    cell.at("country").get<std::string>();
            for (const auto& metric : pair_metrics)
                pair_cells[key][metric].values.push_back(cell.at(metric).get<double>());
        }
        for (const auto& [label, cell] : j.at("per_group").items())
            for (const auto& metric : group_metrics)
                if (cell.contains(metric) && !cell.at(metric).is_null())
                    group_cells[label][metric].values.push_back(
                        cell.at(metric).get<double>());
    }

    auto fmt = [](const CellSeries& s) {
        std::ostringstream o;
        o.setf(std::ios::fixed);
        o.precision(1);
        o << s.mean() << " ± " << s.standard_error();
        return o.str();
    };

    std::string rendered;
    if (format == "json") {
        json j;
        j["runs"] = inputs.size();
        for (const auto& metric : pair_metrics) {
            j["overall"][metric]["mean"] = overall[metric].mean();
            j["overall"][metric]["stderr"] = overall[metric].standard_error();
        }
        for (const auto& [key, metrics] : pair_cells)
            for (const auto& [metric, series] : metrics) {
                j["per_pair"][key][metric]["mean"] = series.mean();
                j["per_pair"][key][metric]["stderr"] = series.standard_error();
            }
        for (const auto& [label, metrics] : group_cells)
            for (const auto& [metric, series] : metrics) {
                j["per_group"][label][metric]["mean"] = series.mean();
                j["per_group"][label][metric]["stderr"] = series.standard_error();
            }
        rendered = j.dump(2);
    } else if (format == "csv") {
        // per-pair table in the language-by-country layout, one block per
        // metric, then the per-group table
        std::set<std::string> languages, countries;
        for (const auto& [key, metrics] : pair_cells) {
            (void)metrics;
            const auto comma = key.find(',');
            languages.insert(key.substr(0, comma));
            countries.insert(key.substr(comma + 1));
        }
        std::ostringstream out;
        for (const auto& metric : pair_metrics) {
            out << metric;
            for (const auto& c : countries) out << "," << c;
            out << "\n";
            for (const auto& l : languages) {
                out << l;
                for (const auto& c : countries) {
                    out << ",";
                    const auto it = pair_cells.find(l + "," + c);
                    if (it != pair_cells.end()) out << fmt(it->second.at(metric));
                }
                out << "\n";
            }
            out << "\n";
        }
        out << "group";
        for (const auto& metric : group_metrics) out << "," << metric;
        out << "\n";
        for (const auto& [label, metrics] : group_cells) {
            out << label;
            for (const auto& metric : group_metrics) {
                out << ",";
                const auto it = metrics.find(metric);
                if (it != metrics.end()) out << fmt(it->second);
            }
            out << "\n";
        }
        rendered = out.str();
    } else {
        throw bridge::ConfigError("--format must be json or csv");
    }

    if (out_path.empty())
        std::cout << rendered << "\n";
    else
        write_file(out_path, rendered);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    for (int i = 0; i < argc; ++i) g_argv.emplace_back(argv[i]);

    CLI::App app{"BRIDGE: SFT + Bernoulli-gated GRPO with a language-consistency reward"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic multilingual corpus");
    std::string gen_world = "default", gen_out, gen_kind = "factual";
    int gen_n = 1000;
    std::uint64_t gen_seed = 0;
    std::vector<double> gen_split = {0.70, 0.15, 0.15};
    double gen_dominant_share = 0.9;
    gen->add_option("--world", gen_world, "'default' or a world.json path");
    gen->add_option("--n", gen_n, "number of records");
    gen->add_option("--seed", gen_seed, "generation seed");
    gen->add_option("--out", gen_out, "output directory (or BRIDGE_OUT_DIR)");
    gen->add_option("--kind", gen_kind, "factual | math | pretrain");
    gen->add_option("--split", gen_split, "sft,grpo,bench fractions")->expected(3);
    gen->add_option("--dominant-share", gen_dominant_share,
                    "dominant-language share for --kind pretrain");

    // train
    auto* train = app.add_subcommand("train", "run sft, grpo, or bridge training");
    std::string train_mode, train_config, train_data, train_out, train_init,
        train_precision = "f32";
    train->add_option("--mode", train_mode, "sft | grpo | bridge")->required();
    train->add_option("--config", train_config, "run configuration file");
    train->add_option("--data", train_data, "data directory (or BRIDGE_DATA_DIR)");
    train->add_option("--out", train_out, "output directory (or BRIDGE_OUT_DIR)");
    train->add_option("--init-checkpoint", train_init, "checkpoint to start from");
    train->add_option("--precision", train_precision, "f32 | f64");

    // eval
    auto* eval = app.add_subcommand("eval", "decode and score a benchmark");
    std::string eval_ckpt, eval_bench, eval_world, eval_identifier, eval_config, eval_out;
    eval->add_option("--checkpoint", eval_ckpt)->required();
    eval->add_option("--bench", eval_bench)->required();
    eval->add_option("--world", eval_world)->required();
    eval->add_option("--identifier", eval_identifier)->required();
    eval->add_option("--config", eval_config);
    eval->add_option("--out", eval_out, "output directory (or BRIDGE_OUT_DIR)");

    // judge
    auto* judge = app.add_subcommand("judge", "score candidate outputs with a judge");
    std::string judge_bench, judge_candidates, judge_endpoint, judge_model = "judge",
                             judge_identifier, judge_out;
    bool judge_mock = false;
    int judge_retries = 3, judge_parallel = 4;
    double judge_timeout = 30.0;
    judge->add_option("--bench", judge_bench)->required();
    judge->add_option("--candidates", judge_candidates)->required();
    judge->add_option("--endpoint", judge_endpoint, "chat-completions base URL");
    judge->add_flag("--mock", judge_mock, "use the deterministic offline judge");
    judge->add_option("--model", judge_model);
    judge->add_option("--identifier", judge_identifier, "identifier.json for --mock");
    judge->add_option("--out", judge_out, "output directory (or BRIDGE_OUT_DIR)");
    judge->add_option("--max-retries", judge_retries);
    judge->add_option("--max-parallel", judge_parallel);
    judge->add_option("--timeout", judge_timeout, "request timeout in seconds");

    // report
    auto* report = app.add_subcommand("report", "aggregate eval reports across seeds");
    std::vector<std::string> report_inputs;
    std::string report_format = "json", report_out;
    report->add_option("--inputs", report_inputs, "per-seed report.json files")->required();
    report->add_option("--format", report_format, "json | csv");
    report->add_option("--out", report_out, "output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed())
            return cmd_gen_data(gen_world, gen_n, gen_seed, gen_out, gen_kind, gen_split,
                                gen_dominant_share);
        if (train->parsed())
            return cmd_train(train_mode, train_config, train_data, train_out, train_init,
                             train_precision);
        if (eval->parsed())
            return cmd_eval(eval_ckpt, eval_bench, eval_world, eval_identifier, eval_config,
                            eval_out);
        if (judge->parsed()) {
            if (!judge_mock && judge_endpoint.empty())
                throw bridge::ConfigError("judge needs --endpoint or --mock");
            if (judge_mock && judge_identifier.empty())
                throw bridge::ConfigError("judge --mock needs --identifier");
            return cmd_judge(judge_bench, judge_candidates, judge_endpoint, judge_model,
                             judge_mock, judge_identifier, judge_out, judge_retries,
                             judge_parallel, judge_timeout);
        }
        if (report->parsed()) return cmd_report(report_inputs, report_format, report_out);
    } catch (const bridge::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const bridge::ContractError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const bridge::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const bridge::SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const bridge::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
