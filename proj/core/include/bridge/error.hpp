#pragma once

#include <stdexcept>
#include <string>

namespace bridge {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor shapes do not line up.
struct DimensionError : Error {
    explicit DimensionError(const std::string& msg) : Error("dimension error: " + msg) {}
};

// A precondition of an operation was violated.
struct ContractError : Error {
    explicit ContractError(const std::string& msg) : Error("contract error: " + msg) {}
};

// A token or table index is out of range.
struct IndexError : Error {
    explicit IndexError(const std::string& msg) : Error("index error: " + msg) {}
};

// Bad input data (empty corpus, unusable record, ...).
struct DataError : Error {
    explicit DataError(const std::string& msg) : Error("data error: " + msg) {}
};

// Malformed serialized input. Carries a 1-based line number when known.
struct ParseError : Error {
    long line;
    explicit ParseError(const std::string& msg, long line_number = -1)
        : Error(line_number >= 0 ? "parse error at line " + std::to_string(line_number) + ": " + msg
                                 : "parse error: " + msg),
          line(line_number) {}
};

// Structurally valid input missing a required field.
struct SchemaError : Error {
    std::string field;
    explicit SchemaError(const std::string& field_name, const std::string& msg)
        : Error("schema error: field '" + field_name + "': " + msg), field(field_name) {}
};

// Invalid or conflicting configuration.
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error("config error: " + msg) {}
};

// HTTP transport gave up (exhausted retries, unreachable endpoint).
struct TransportError : Error {
    explicit TransportError(const std::string& msg) : Error("transport error: " + msg) {}
};

// A word has no entry in the source lexicon. Carries the offending token.
struct TranslationError : Error {
    std::string token;
    explicit TranslationError(const std::string& offending_token)
        : Error("translation error: unknown token '" + offending_token + "'"),
          token(offending_token) {}
};

}  // namespace bridge
