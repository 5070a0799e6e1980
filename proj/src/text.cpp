// SPDX-License-Identifier: Apache-2.0
#include "tsdb/text.hpp"

#include <cctype>
#include <charconv>

namespace tsdb {

std::vector<std::string> split_tokens(std::string_view input) {
    std::vector<std::string> tokens;
    size_t start = 0;
    while (start <= input.size()) {
        size_t space = input.find(' ', start);
        if (space == std::string_view::npos) {
            tokens.emplace_back(input.substr(start));
            break;
        }
        tokens.emplace_back(input.substr(start, space - start));
        start = space + 1;
    }
    if (tokens.size() == 1 && tokens[0].empty()) tokens.clear();
    return tokens;
}

std::string join_tokens(const std::vector<std::string>& tokens, std::string_view separator) {
    std::string out;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) out += separator;
        out += tokens[i];
    }
    return out;
}

bool is_punctuation_token(std::string_view token) {
    if (token.empty()) return false;
    for (unsigned char c : token) {
        if (c >= 0x80 || !std::ispunct(c)) return false;
    }
    return true;
}

int64_t computed_length(std::string_view input) {
    auto tokens = split_tokens(input);
    if (tokens.empty()) return 0;
    int64_t n = static_cast<int64_t>(tokens.size());
    if (is_punctuation_token(tokens.back())) n -= 1;
    return n;
}

bool is_single_spaced(std::string_view input) {
    if (input.empty()) return false;
    if (input.front() == ' ' || input.back() == ' ') return false;
    return input.find("  ") == std::string_view::npos;
}

std::string escape_field(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        switch (c) {
            case '@': out += "\\@"; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            default: out += c;
        }
    }
    return out;
}

std::optional<std::vector<std::string>> split_record_line(std::string_view line,
                                                          std::string* diagnostic) {
    std::vector<std::string> fields;
    std::string current;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (c == '\\') {
            if (i + 1 >= line.size()) {
                if (diagnostic) *diagnostic = "dangling backslash at end of line";
                return std::nullopt;
            }
            char next = line[++i];
            switch (next) {
                case '@': current += '@'; break;
                case '\\': current += '\\'; break;
                case 'n': current += '\n'; break;
                default:
                    if (diagnostic) {
                        *diagnostic = std::string("unknown escape \"\\") + next + "\"";
                    }
                    return std::nullopt;
            }
        } else if (c == '@') {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current += c;
        }
    }
    fields.push_back(std::move(current));
    return fields;
}

std::string join_record_line(const std::vector<std::string>& fields) {
    std::string out;
    for (size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) out += '@';
        out += escape_field(fields[i]);
    }
    return out;
}

std::optional<int64_t> parse_int(std::string_view text) {
    if (text.empty()) return std::nullopt;
    int64_t value = 0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return value;
}

std::string trim(std::string_view text) {
    size_t begin = 0;
    size_t end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    return std::string(text.substr(begin, end - begin));
}

std::vector<std::string> split_on(std::string_view text, char separator) {
    std::vector<std::string> parts;
    size_t start = 0;
    while (true) {
        size_t pos = text.find(separator, start);
        if (pos == std::string_view::npos) {
            parts.emplace_back(text.substr(start));
            break;
        }
        parts.emplace_back(text.substr(start, pos - start));
        start = pos + 1;
    }
    return parts;
}

}  // namespace tsdb
