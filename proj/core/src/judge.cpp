#include "bridge/judge.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <regex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "bridge/rng.hpp"

namespace bridge {

namespace {

using nlohmann::json;

constexpr const char* kRubric =
    "You are a strict evaluator of reasoning traces. Compare the candidate "
    "reasoning against the reference reasoning and judge it on logical "
    "structure, key insights, factual correctness, and conclusion validity. "
    "Also decide whether the candidate reasoning is written in the expected "
    "language, and whether the candidate answer matches the gold answer.";

constexpr const char* kOutputInstruction =
    "Respond with a single JSON object and nothing else: "
    "{\"reasoning_score\": <integer 0-100>, \"language_mismatch\": <true|false>, "
    "\"answer_correct\": <true|false>}";

}  // namespace

std::vector<ChatMessage> build_prompt(const JudgeRequest& request) {
    std::ostringstream system;
    system << kRubric << "\nRubric version: " << request.rubric_version << "\n"
           << kOutputInstruction;

    std::ostringstream user;
    user << "Question (" << request.language << "): " << request.question << "\n\n"
         << "Expected language: " << request.language << "\n\n"
         << "Reference reasoning:\n" << request.reference_reasoning << "\n\n"
         << "Candidate reasoning:\n" << request.candidate_reasoning << "\n\n"
         << "Candidate answer: " << request.candidate_answer << "\n"
         << "Gold answer: " << request.gold_answer << "\n";

    return {{"system", system.str()}, {"user", user.str()}};
}

namespace {

// First balanced top-level {...} block, string-aware.
std::string first_json_object(const std::string& text) {
    const auto start = text.find('{');
    if (start == std::string::npos) return "";
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (escaped) escaped = false;
            else if (c == '\\') escaped = true;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}') {
            --depth;
            if (depth == 0) return text.substr(start, i - start + 1);
        }
    }
    return "";
}

int clamp_score(double score) {
    if (score < 0 || score > 100)
        std::cerr << "[judge] reasoning_score " << score << " clamped to [0, 100]\n";
    return static_cast<int>(std::lround(std::min(100.0, std::max(0.0, score))));
}

bool verdict_from_json(const json& j, JudgeVerdict& out) {
    if (!j.is_object()) return false;
    if (!j.contains("reasoning_score") || !j.contains("language_mismatch") ||
        !j.contains("answer_correct"))
        return false;
    if (!j.at("reasoning_score").is_number() || !j.at("language_mismatch").is_boolean() ||
        !j.at("answer_correct").is_boolean())
        return false;
    out.reasoning_score = clamp_score(j.at("reasoning_score").get<double>());
    out.language_mismatch = j.at("language_mismatch").get<bool>();
    out.answer_correct = j.at("answer_correct").get<bool>();
    return true;
}

bool parse_bool_word(const std::string& w) { return w == "true" || w == "True" || w == "TRUE"; }

}  // namespace

JudgeVerdict parse_verdict(const std::string& raw) {
    JudgeVerdict verdict;
    verdict.raw = raw;

    const std::string object = first_json_object(raw);
    if (!object.empty()) {
        try {
            const json j = json::parse(object);
            if (verdict_from_json(j, verdict)) return verdict;
        } catch (const json::parse_error&) {
            // fall through to the labeled-field extraction
        }
    }

    static const std::regex score_re(R"(reasoning_score\"?\s*[:=]\s*(-?[0-9]+(\.[0-9]+)?))",
                                     std::regex::icase);
    static const std::regex mismatch_re(R"(language_mismatch\"?\s*[:=]\s*(true|false))",
                                        std::regex::icase);
    static const std::regex correct_re(R"(answer_correct\"?\s*[:=]\s*(true|false))",
                                       std::regex::icase);
    std::smatch score_m, mismatch_m, correct_m;
    if (std::regex_search(raw, score_m, score_re) &&
        std::regex_search(raw, mismatch_m, mismatch_re) &&
        std::regex_search(raw, correct_m, correct_re)) {
        verdict.reasoning_score = clamp_score(std::stod(score_m[1].str()));
        verdict.language_mismatch = parse_bool_word(mismatch_m[1].str());
        verdict.answer_correct = parse_bool_word(correct_m[1].str());
        return verdict;
    }

    throw ParseError("judge response carries no parseable verdict: " +
                     raw.substr(0, std::min<std::size_t>(raw.size(), 200)));
}

namespace {

std::string build_body(const JudgeRequest& request, const EndpointConfig& endpoint) {
    json body;
    body["model"] = endpoint.model;
    body["temperature"] = 0;
    json messages = json::array();
    for (const auto& m : build_prompt(request))
        messages.push_back({{"role", m.role}, {"content", m.content}});
    body["messages"] = std::move(messages);
    return body.dump();
}

std::string make_request_id() {
    static std::atomic<std::uint64_t> counter{0};
    Rng rng(static_cast<std::uint64_t>(
                std::chrono::steady_clock::now().time_since_epoch().count()) +
            counter.fetch_add(1));
    std::ostringstream out;
    out << std::hex << rng.next_u64();
    return out.str();
}

}  // namespace

JudgeVerdict judge(const JudgeRequest& request, const EndpointConfig& endpoint) {
    endpoint.validate();

    const std::string body = build_body(request, endpoint);  // one payload per verdict
    const std::string request_id = make_request_id();

    httplib::Client client(endpoint.base_url);
    const auto timeout_ms = static_cast<time_t>(endpoint.timeout_seconds * 1000.0);
    client.set_connection_timeout(0, timeout_ms * 1000);
    client.set_read_timeout(0, timeout_ms * 1000);

    httplib::Headers headers = {{"X-Request-Id", request_id}};
    if (const char* token = std::getenv(endpoint.auth_env.c_str()))
        headers.emplace("Authorization", std::string("Bearer ") + token);

    Rng jitter_rng(std::hash<std::string>{}(request_id));
    std::string last_error;
    for (int attempt = 0; attempt <= endpoint.max_retries; ++attempt) {
        if (attempt > 0) {
            const double base = endpoint.backoff_base_ms * std::pow(2.0, attempt - 1);
            const double jitter = jitter_rng.next_double() * 0.1 * base;
            std::this_thread::sleep_for(
                std::chrono::milliseconds(static_cast<long>(base + jitter)));
        }
        auto res = client.Post("/v1/chat/completions", headers, body, "application/json");
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;  // retryable
        }
        if (res->status >= 500) {
            last_error = "server returned " + std::to_string(res->status);
            continue;  // retryable
        }
        if (res->status != 200)
            throw TransportError("judge endpoint returned " + std::to_string(res->status) +
                                 ": " + res->body);

        // chat-completions shape first, then the body itself
        try {
            const json j = json::parse(res->body);
            if (j.contains("choices") && !j.at("choices").empty()) {
                const auto& msg = j.at("choices").at(0).at("message").at("content");
                return parse_verdict(msg.get<std::string>());
            }
        } catch (const json::exception&) {
            // not a chat payload; try the raw body
        }
        return parse_verdict(res->body);
    }
    throw TransportError("judge endpoint unreachable after " +
                         std::to_string(endpoint.max_retries + 1) + " attempts: " +
                         last_error);
}

std::vector<JudgeVerdict> judge_batch(const std::vector<JudgeRequest>& requests,
                                      const EndpointConfig& endpoint) {
    endpoint.validate();
    std::vector<JudgeVerdict> verdicts(requests.size());
    std::vector<std::string> errors(requests.size());
    std::atomic<std::size_t> next{0};

    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(endpoint.max_parallel),
                              std::max<std::size_t>(requests.size(), 1));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= requests.size()) return;
                try {
                    verdicts[i] = judge(requests[i], endpoint);
                } catch (const std::exception& e) {
                    errors[i] = e.what();
                }
            }
        });
    }
    for (auto& t : pool) t.join();

    for (std::size_t i = 0; i < errors.size(); ++i)
        if (!errors[i].empty())
            throw TransportError("request " + std::to_string(i) + " failed: " + errors[i]);
    return verdicts;
}

namespace {

std::vector<std::string> whitespace_tokens(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string w;
    while (in >> w) out.push_back(w);
    return out;
}

}  // namespace

JudgeVerdict mock_judge(const JudgeRequest& request, const Identifier& id,
                        AnswerComparator comparator) {
    JudgeVerdict verdict;
    verdict.raw = "mock";

    verdict.answer_correct = !request.candidate_answer.empty() &&
                             answers_match(request.candidate_answer, request.gold_answer,
                                           comparator);

    const IdentifyResult detected = id.identify(request.candidate_reasoning);
    verdict.language_mismatch =
        detected.undetermined() || detected.language != request.language;

    // token-level multiset overlap against the reference trace
    const auto ref = whitespace_tokens(request.reference_reasoning);
    auto cand = whitespace_tokens(request.candidate_reasoning);
    std::size_t overlap = 0;
    for (const auto& token : ref) {
        auto it = std::find(cand.begin(), cand.end(), token);
        if (it != cand.end()) {
            ++overlap;
            cand.erase(it);
        }
    }
    verdict.reasoning_score =
        ref.empty() ? 0
                    : clamp_score(100.0 * static_cast<double>(overlap) /
                                  static_cast<double>(ref.size()));
    return verdict;
}

}  // namespace bridge
