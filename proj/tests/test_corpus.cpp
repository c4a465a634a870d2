#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>

#include "bridge/corpus.hpp"
#include "bridge/synthlingua.hpp"

using bridge::Record;
using bridge::SplitSpec;

namespace {

std::vector<Record> sample_records(int n) {
    std::vector<Record> out;
    for (int i = 0; i < n; ++i) {
        Record r;
        r.id = "q-" + std::to_string(i);
        r.question = "question " + std::to_string(i);
        r.answer = "answer";
        r.reasoning = "<step> because";
        r.language = i % 2 == 0 ? "aa" : "bb";
        if (i % 3 == 0) {
            r.country = "AA";
            r.assoc = i % 2 == 0;
        }
        out.push_back(std::move(r));
    }
    return out;
}

struct TempFile {
    std::string path;
    explicit TempFile(std::string p) : path(std::move(p)) {}
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("jsonl round-trip is the identity") {
    TempFile f("test_corpus_roundtrip.jsonl");
    const auto records = sample_records(20);
    bridge::save_jsonl(records, f.path);
    const auto loaded = bridge::load_jsonl(f.path);
    CHECK(loaded == records);
}

TEST_CASE("empty file loads as an empty list") {
    TempFile f("test_corpus_empty.jsonl");
    std::ofstream(f.path).close();
    CHECK(bridge::load_jsonl(f.path).empty());
}

TEST_CASE("unknown fields are preserved") {
    const std::string line =
        R"({"id":"x","question":"q","answer":"a","reasoning":"r","language":"aa",)"
        R"("kind":"math","custom":{"nested":1}})";
    const Record r = bridge::record_from_json_line(line);
    CHECK(r.extras_json.find("math") != std::string::npos);
    CHECK(r.extras_json.find("nested") != std::string::npos);
    const Record back = bridge::record_from_json_line(bridge::record_to_json_line(r));
    CHECK(back == r);
}

TEST_CASE("schema and parse errors carry context") {
    TempFile f("test_corpus_bad.jsonl");
    {
        std::ofstream out(f.path);
        out << R"({"id":"a","question":"q","answer":"a","reasoning":"r","language":"aa"})"
            << "\n";
        out << R"({"id":"b","answer":"a","reasoning":"r","language":"aa"})" << "\n";
    }
    try {
        bridge::load_jsonl(f.path);
        FAIL("expected SchemaError");
    } catch (const bridge::SchemaError& e) {
        CHECK(e.field == "question");
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }

    TempFile g("test_corpus_malformed.jsonl");
    std::ofstream(g.path) << "{not json\n";
    try {
        bridge::load_jsonl(g.path);
        FAIL("expected ParseError");
    } catch (const bridge::ParseError& e) {
        CHECK(e.line == 1);
    }
}

TEST_CASE("split sizes follow the floor-plus-remainder rule") {
    SplitSpec spec;  // 0.70 / 0.15 / 0.15
    {
        const auto parts = bridge::split(sample_records(3000), spec);
        CHECK(parts.sft.size() == 2100);
        CHECK(parts.grpo.size() == 450);
        CHECK(parts.bench.size() == 450);
    }
    {
        const auto parts = bridge::split(sample_records(10), spec);
        CHECK(parts.sft.size() == 8);
        CHECK(parts.grpo.size() == 1);
        CHECK(parts.bench.size() == 1);
    }
    {
        SplitSpec all;
        all.sft = 1.0;
        all.grpo = 0.0;
        all.bench = 0.0;
        const auto parts = bridge::split(sample_records(10), all);
        CHECK(parts.sft.size() == 10);
        CHECK(parts.grpo.empty());
        CHECK(parts.bench.empty());
    }
}

TEST_CASE("split is deterministic, disjoint, and covering") {
    const auto records = sample_records(100);
    SplitSpec spec;
    spec.seed = 5;
    const auto a = bridge::split(records, spec);
    const auto b = bridge::split(records, spec);
    CHECK(a.sft == b.sft);
    CHECK(a.grpo == b.grpo);
    CHECK(a.bench == b.bench);

    std::set<std::string> seen;
    for (const auto* part : {&a.sft, &a.grpo, &a.bench})
        for (const auto& r : *part) CHECK(seen.insert(r.id).second);
    CHECK(seen.size() == records.size());

    SplitSpec other = spec;
    other.seed = 6;
    const auto c = bridge::split(records, other);
    CHECK(a.sft != c.sft);  // different shuffle
}

TEST_CASE("split fraction validation") {
    SplitSpec bad;
    bad.sft = 0.5;
    bad.grpo = 0.2;
    bad.bench = 0.2;
    CHECK_THROWS_AS(bridge::split(sample_records(4), bad), bridge::ConfigError);
    bad.sft = -0.1;
    bad.grpo = 0.6;
    bad.bench = 0.5;
    CHECK_THROWS_AS(bridge::split(sample_records(4), bad), bridge::ConfigError);
}

TEST_CASE("validate flags duplicates, empties, unknown languages") {
    auto records = sample_records(5);
    CHECK(bridge::validate(records, {"aa", "bb"}).empty());

    records.push_back(records[0]);  // duplicate id and question
    records[1].question = "";
    records[2].language = "xx";
    const auto violations = bridge::validate(records, {"aa", "bb"});

    bool dup_id = false, dup_q = false, empty_q = false, bad_lang = false;
    for (const auto& v : violations) {
        if (v.kind == "duplicate-id" && v.record_id == "q-0") dup_id = true;
        if (v.kind == "duplicate-question") dup_q = true;
        if (v.kind == "empty-field" && v.record_id == "q-1") empty_q = true;
        if (v.kind == "unknown-language" && v.record_id == "q-2") bad_lang = true;
    }
    CHECK(dup_id);
    CHECK(dup_q);
    CHECK(empty_q);
    CHECK(bad_lang);
}

TEST_CASE("generated corpora validate cleanly and round-trip") {
    const auto world = bridge::make_world(bridge::WorldConfig{});
    const auto records = bridge::to_records(bridge::generate_factual(world, 50, 3));
    CHECK(bridge::validate(records, world.language_codes()).empty());

    TempFile f("test_corpus_generated.jsonl");
    bridge::save_jsonl(records, f.path);
    CHECK(bridge::load_jsonl(f.path) == records);
}

TEST_CASE("run config parses, validates, and honors BRIDGE_SEED") {
    const std::string text = R"(
# comment
[run]
seed = 7
languages = aa, bb, cc
translator_policy = uniform

[optimizer]
lr = 2e-4
batch_size = 4

[grpo]
group_size = 4
clip_eps = 0.1

[bridge]
gate_probability = 0.05

[policy]
model_dim = 16
n_heads = 2
)";
    const auto c = bridge::parse_run_config(text);
    CHECK(c.seed == 7);
    CHECK(c.languages == std::vector<std::string>{"aa", "bb", "cc"});
    CHECK(c.optimizer.lr == doctest::Approx(2e-4));
    CHECK(c.optimizer.beta1 == doctest::Approx(0.9));     // default
    CHECK(c.optimizer.beta2 == doctest::Approx(0.95));    // default
    CHECK(c.optimizer.weight_decay == doctest::Approx(1e-4));
    CHECK(c.optimizer.warmup_ratio == doctest::Approx(0.05));
    CHECK(c.optimizer.epochs == 5);
    CHECK(c.grpo.group_size == 4);
    CHECK(c.grpo.max_steps == 10);
    CHECK(c.grpo.max_completion_tokens == 256);
    CHECK(c.gate_probability == doctest::Approx(0.05));
    CHECK(c.policy.model_dim == 16);

    setenv("BRIDGE_SEED", "99", 1);
    const auto c2 = bridge::parse_run_config(text);
    unsetenv("BRIDGE_SEED");
    CHECK(c2.seed == 99);

    CHECK_THROWS_AS(bridge::parse_run_config("[run]\nbogus_key = 1\n"), bridge::ConfigError);
    CHECK_THROWS_AS(bridge::parse_run_config("[nosuch]\nx = 1\n"), bridge::ConfigError);
    CHECK_THROWS_AS(bridge::parse_run_config("[grpo]\ngroup_size = 1\n"),
                    bridge::ConfigError);
    CHECK_THROWS_AS(bridge::parse_run_config("[bridge]\ngate_probability = 1.5\n"),
                    bridge::ConfigError);

    // dump -> parse round-trip preserves the values
    const auto c3 = bridge::parse_run_config(bridge::dump_run_config(c));
    CHECK(c3.seed == c.seed);
    CHECK(c3.optimizer.lr == doctest::Approx(c.optimizer.lr));
    CHECK(c3.gate_probability == doctest::Approx(c.gate_probability));
}
