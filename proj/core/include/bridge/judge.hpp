#pragma once

#include <string>
#include <vector>

#include "bridge/error.hpp"
#include "bridge/langid.hpp"
#include "bridge/rewards.hpp"

namespace bridge {

struct JudgeRequest {
    std::string question;
    std::string reference_reasoning;
    std::string candidate_reasoning;
    std::string candidate_answer;  // may be empty; empty auto-fails correctness
    std::string gold_answer;
    std::string language;
    std::string rubric_version = "v1";
};

struct JudgeVerdict {
    int reasoning_score = 0;  // clamped to [0, 100]
    bool language_mismatch = false;
    bool answer_correct = false;
    std::string raw;  // the response text the verdict was parsed from
};

struct EndpointConfig {
    std::string base_url = "http://127.0.0.1:8080";
    std::string model = "judge";
    std::string auth_env = "BRIDGE_JUDGE_TOKEN";  // name of the env var holding the token
    double timeout_seconds = 30.0;
    int max_retries = 3;
    int max_parallel = 4;
    double backoff_base_ms = 1000.0;  // doubles per attempt, with jitter

    void validate() const {
        if (timeout_seconds <= 0) throw ConfigError("judge timeout must be positive");
        if (max_retries < 0) throw ConfigError("judge max_retries must be nonnegative");
        if (max_parallel < 1) throw ConfigError("judge max_parallel must be >= 1");
    }
};

struct ChatMessage {
    std::string role;
    std::string content;
};

// Deterministic rubric prompt: system message carries the evaluation criteria
// and a strict JSON output instruction, user message carries the material.
std::vector<ChatMessage> build_prompt(const JudgeRequest& request);

// First a strict parse of the first top-level JSON object in the text, then a
// labeled-field fallback. Scores outside [0, 100] are clamped with a warning.
JudgeVerdict parse_verdict(const std::string& raw);

// POST a chat-completions body at temperature 0 and parse the verdict.
// Retries with exponential backoff on timeouts and 5xx responses; one request
// id and one payload per verdict across all attempts.
JudgeVerdict judge(const JudgeRequest& request, const EndpointConfig& endpoint);

// Fan-out over a fixed-size worker pool (at most max_parallel in flight);
// verdicts come back in request order.
std::vector<JudgeVerdict> judge_batch(const std::vector<JudgeRequest>& requests,
                                      const EndpointConfig& endpoint);

// Offline test double: answer correctness via the shared answer comparator,
// language mismatch via the identifier, reasoning score from token overlap
// with the reference trace.
JudgeVerdict mock_judge(const JudgeRequest& request, const Identifier& id,
                        AnswerComparator comparator = AnswerComparator::ExactNormalized);

}  // namespace bridge
