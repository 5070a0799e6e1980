// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tsdb {

/// Base class for all tsdb errors.
class Error : public std::exception {
public:
    explicit Error(std::string message) : message_(std::move(message)) {}
    const char* what() const noexcept override { return message_.c_str(); }

private:
    std::string message_;
};

/// Splits a tokenized input string on single spaces. Double spaces yield
/// empty tokens, which validation flags downstream.
std::vector<std::string> split_tokens(std::string_view input);

std::string join_tokens(const std::vector<std::string>& tokens,
                        std::string_view separator = " ");

/// True when the token is nonempty and consists solely of ASCII
/// punctuation characters.
bool is_punctuation_token(std::string_view token);

/// Token count of the input, excluding a sentence-final punctuation token.
int64_t computed_length(std::string_view input);

/// True when the input has no leading, trailing, or doubled spaces.
bool is_single_spaced(std::string_view input);

// Field escaping for the on-disk record format: "@" joins fields, with
// "\@" for a literal at-sign, "\\" for a backslash, and "\n" for a newline.
std::string escape_field(std::string_view raw);

/// Splits one record line into unescaped fields. Returns nullopt (with a
/// diagnostic) on stray backslashes or unknown escapes.
std::optional<std::vector<std::string>> split_record_line(std::string_view line,
                                                          std::string* diagnostic = nullptr);

std::string join_record_line(const std::vector<std::string>& fields);

std::optional<int64_t> parse_int(std::string_view text);

std::string trim(std::string_view text);

std::vector<std::string> split_on(std::string_view text, char separator);

}  // namespace tsdb
