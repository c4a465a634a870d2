#pragma once

#include <string>

#include "bridge/corpus.hpp"

namespace bridge {

// Machine-translator seam. Training only needs record-level translation; the
// synthetic world provides the shipped implementation.
class Translator {
public:
    virtual ~Translator() = default;
    virtual Record translate_record(const Record& record,
                                    const std::string& target_language) const = 0;
};

}  // namespace bridge
