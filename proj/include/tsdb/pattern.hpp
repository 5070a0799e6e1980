// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "tsdb/text.hpp"

namespace tsdb {

class PatternError : public Error {
public:
    PatternError(std::string message, size_t offset)
        : Error(std::move(message)), offset_(offset) {}
    size_t offset() const { return offset_; }

private:
    size_t offset_;
};

/// The match operator's pattern dialect: literals, ".", "[...]" classes
/// with ranges and negation, "*", "+", "?", "|", grouping, and the "^"
/// and "$" anchors. Backslash escapes metacharacters. No backreferences.
/// Matching is an unanchored substring search over bytes.
class Pattern {
public:
    explicit Pattern(std::string_view source);  // throws PatternError
    Pattern(Pattern&&) noexcept;
    Pattern& operator=(Pattern&&) noexcept;
    ~Pattern();

    bool search(std::string_view text) const;
    const std::string& source() const { return source_; }

    struct Node;  // defined in pattern.cpp

private:
    std::string source_;
    std::unique_ptr<Node> root_;
};

}  // namespace tsdb
