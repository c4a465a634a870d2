#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bridge/rewards.hpp"
#include "bridge/synthlingua.hpp"

using bridge::AnswerComparator;
using bridge::LanguageScope;
using bridge::Record;
using bridge::RewardSpec;

namespace {

struct Fixture {
    bridge::SynthWorld world = bridge::make_world(bridge::WorldConfig{});
    bridge::Identifier id =
        bridge::Identifier::train(bridge::identifier_corpora(world, 40, 2));
    std::vector<bridge::TaskRecord> tasks = bridge::generate_factual(world, 25, 4);
};

}  // namespace

TEST_CASE("reward_format marker rules") {
    CHECK(bridge::reward_format("<step> aa <step> bb <answer>12") == 1);
    CHECK(bridge::reward_format("<step> aa bb") == 0);                      // no answer
    CHECK(bridge::reward_format("<step> a <answer>1 <answer>2") == 0);      // two answers
    CHECK(bridge::reward_format("<answer>12 <step> a") == 0);               // step after answer
    CHECK(bridge::reward_format("<step> a <answer>   ") == 0);              // empty tail
    CHECK(bridge::reward_format("aa bb <answer>12") == 0);                  // no step at all
}

TEST_CASE("reward_answer comparators") {
    CHECK(bridge::reward_answer("<step> x <answer>12", "12",
                                AnswerComparator::IntegerEqual) == 1);
    CHECK(bridge::reward_answer("<answer> 12 ", "12",
                                AnswerComparator::ExactNormalized) == 1);
    CHECK(bridge::reward_answer("<answer> +12", "12", AnswerComparator::IntegerEqual) == 1);
    CHECK(bridge::reward_answer("<answer>13", "12", AnswerComparator::IntegerEqual) == 0);
    CHECK(bridge::reward_answer("no marker here", "12",
                                AnswerComparator::ExactNormalized) == 0);
    CHECK(bridge::reward_answer("<answer>abc", "12", AnswerComparator::IntegerEqual) == 0);
    CHECK(bridge::reward_answer("<answer> ABBA. ", "abba",
                                AnswerComparator::ExactNormalized) == 1);
}

TEST_CASE("reward_language follows the detector") {
    Fixture fx;
    const auto& task = fx.tasks[0];
    const std::string output =
        bridge::render_output_text(task.reasoning, task.answer);

    CHECK(bridge::reward_language(output, task.language, fx.id,
                                  LanguageScope::FullOutput) == 1);

    // same content translated elsewhere no longer matches the target
    const auto other_code = fx.world.language_codes()[1] == task.language
                                ? fx.world.language_codes()[2]
                                : fx.world.language_codes()[1];
    const auto other = bridge::translate(fx.world, task, other_code);
    const std::string other_output =
        bridge::render_output_text(other.reasoning, other.answer);
    CHECK(bridge::reward_language(other_output, task.language, fx.id,
                                  LanguageScope::FullOutput) == 0);

    // reasoning in target language, answer digits only: reasoning_only scope
    // scores 1 because digits are stripped anyway
    const std::string digits_answer = task.reasoning + "<answer>1234";
    CHECK(bridge::reward_language(digits_answer, task.language, fx.id,
                                  LanguageScope::ReasoningOnly) == 1);

    CHECK_THROWS_AS(bridge::reward_language(output, "zz", fx.id,
                                            LanguageScope::FullOutput),
                    bridge::ConfigError);
}

TEST_CASE("composite totals are the exact weighted sum") {
    Fixture fx;
    const auto& task = fx.tasks[3];
    const Record record = bridge::to_record(task);
    const std::string perfect = bridge::render_output_text(task.reasoning, task.answer);

    RewardSpec spec;  // weights (1,1,1)
    const auto all = bridge::composite(perfect, record, spec, fx.id);
    CHECK(all.r_format == 1);
    CHECK(all.r_answer == 1);
    CHECK(all.r_lang == 1);
    CHECK(all.total == 3.0);

    // only language satisfied
    const std::string lang_only = task.reasoning + " " + task.reasoning;
    const auto lo = bridge::composite(lang_only, record, spec, fx.id);
    CHECK(lo.r_lang == 1);
    CHECK(lo.r_format == 0);
    CHECK(lo.r_answer == 0);
    CHECK(lo.total == 1.0);

    // weights (0,0,1) project onto the language reward
    RewardSpec lang_spec;
    lang_spec.w_format = 0;
    lang_spec.w_answer = 0;
    lang_spec.w_lang = 1;
    const auto proj = bridge::composite(perfect, record, lang_spec, fx.id);
    CHECK(proj.total == static_cast<double>(proj.r_lang));

    // monotone: flipping any component up never lowers the total
    const auto worse = bridge::composite("garbage", record, spec, fx.id);
    CHECK(worse.total <= all.total);
}

TEST_CASE("composite is pure") {
    Fixture fx;
    const Record record = bridge::to_record(fx.tasks[0]);
    const std::string output =
        bridge::render_output_text(fx.tasks[0].reasoning, fx.tasks[0].answer);
    RewardSpec spec;
    const auto a = bridge::composite(output, record, spec, fx.id);
    const auto b = bridge::composite(output, record, spec, fx.id);
    CHECK(a.total == b.total);
    CHECK(a.r_lang == b.r_lang);
}

TEST_CASE("reward spec validation") {
    RewardSpec spec;
    spec.w_format = spec.w_answer = spec.w_lang = 0;
    CHECK_THROWS_AS(spec.validate(), bridge::ConfigError);
    spec.w_format = -1;
    CHECK_THROWS_AS(spec.validate(), bridge::ConfigError);
}
