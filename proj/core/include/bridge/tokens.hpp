#pragma once

#include <string>
#include <vector>

namespace bridge {
namespace tok {

// Byte-level vocabulary (0..255) plus reserved markers. The step and answer
// markers map 1:1 to the literal strings "<step>" and "<answer>" in text.
constexpr int kPromptEnd = 256;
constexpr int kStep = 257;
constexpr int kAnswer = 258;
constexpr int kStop = 259;
constexpr int kVocabSize = 260;

constexpr const char* kStepMark = "<step>";
constexpr const char* kAnswerMark = "<answer>";

}  // namespace tok

// Token ids plus optional boundary positions within the sequence.
struct TokenSequence {
    std::vector<int> ids;
    int prompt_end = -1;     // index of the prompt-end marker, -1 if absent
    int reasoning_end = -1;  // index of the answer marker, -1 if absent

    std::size_t size() const { return ids.size(); }
};

// Text -> ids. Marker strings become their reserved ids, all other bytes map
// to themselves.
std::vector<int> encode(const std::string& text);

// Ids -> text. Prompt-end and stop render as nothing.
std::string decode(const std::vector<int>& ids);

// question | PROMPT_END
TokenSequence render_prompt(const std::string& question);

// question | PROMPT_END | reasoning | ANSWER | answer | STOP
TokenSequence render_example(const std::string& question, const std::string& reasoning,
                             const std::string& answer);

// The output text a perfect completion would decode to.
std::string render_output_text(const std::string& reasoning, const std::string& answer);

// Model outputs are raw byte strings and may not be valid UTF-8. These map
// bytes to codepoints U+0000..U+00FF and back, losslessly, so outputs can sit
// inside JSON documents.
std::string bytes_to_utf8(const std::string& bytes);
std::string utf8_to_bytes(const std::string& utf8);

}  // namespace bridge
