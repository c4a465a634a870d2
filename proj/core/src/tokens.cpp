#include "bridge/tokens.hpp"

#include <cstring>

namespace bridge {

namespace {

bool starts_with(const std::string& s, std::size_t pos, const char* mark) {
    const std::size_t n = std::strlen(mark);
    return s.compare(pos, n, mark) == 0;
}

}  // namespace

std::vector<int> encode(const std::string& text) {
    std::vector<int> ids;
    ids.reserve(text.size());
    for (std::size_t i = 0; i < text.size();) {
        if (text[i] == '<' && starts_with(text, i, tok::kStepMark)) {
            ids.push_back(tok::kStep);
            i += std::strlen(tok::kStepMark);
        } else if (text[i] == '<' && starts_with(text, i, tok::kAnswerMark)) {
            ids.push_back(tok::kAnswer);
            i += std::strlen(tok::kAnswerMark);
        } else {
            ids.push_back(static_cast<unsigned char>(text[i]));
            ++i;
        }
    }
    return ids;
}

std::string decode(const std::vector<int>& ids) {
    std::string out;
    out.reserve(ids.size());
    for (int id : ids) {
        if (id >= 0 && id < 256)
            out.push_back(static_cast<char>(static_cast<unsigned char>(id)));
        else if (id == tok::kStep)
            out += tok::kStepMark;
        else if (id == tok::kAnswer)
            out += tok::kAnswerMark;
        // prompt-end and stop carry no surface form
    }
    return out;
}

TokenSequence render_prompt(const std::string& question) {
    TokenSequence seq;
    seq.ids = encode(question);
    seq.prompt_end = static_cast<int>(seq.ids.size());
    seq.ids.push_back(tok::kPromptEnd);
    return seq;
}

TokenSequence render_example(const std::string& question, const std::string& reasoning,
                             const std::string& answer) {
    TokenSequence seq = render_prompt(question);
    for (int id : encode(reasoning)) seq.ids.push_back(id);
    seq.reasoning_end = static_cast<int>(seq.ids.size());
    seq.ids.push_back(tok::kAnswer);
    for (int id : encode(answer)) seq.ids.push_back(id);
    seq.ids.push_back(tok::kStop);
    return seq;
}

std::string render_output_text(const std::string& reasoning, const std::string& answer) {
    return reasoning + tok::kAnswerMark + answer;
}

std::string bytes_to_utf8(const std::string& bytes) {
    std::string out;
    out.reserve(bytes.size());
    for (unsigned char c : bytes) {
        if (c < 0x80) {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back(static_cast<char>(0xC0 | (c >> 6)));
            out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
        }
    }
    return out;
}

std::string utf8_to_bytes(const std::string& utf8) {
    std::string out;
    out.reserve(utf8.size());
    for (std::size_t i = 0; i < utf8.size();) {
        const unsigned char c = static_cast<unsigned char>(utf8[i]);
        if (c < 0x80) {
            out.push_back(static_cast<char>(c));
            ++i;
        } else if ((c & 0xE0) == 0xC0 && i + 1 < utf8.size()) {
            const unsigned char c2 = static_cast<unsigned char>(utf8[i + 1]);
            out.push_back(static_cast<char>(((c & 0x1F) << 6) | (c2 & 0x3F)));
            i += 2;
        } else {
            out.push_back(static_cast<char>(c));  // pass through other sequences
            ++i;
        }
    }
    return out;
}

}  // namespace bridge
