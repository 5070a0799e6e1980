// SPDX-License-Identifier: Apache-2.0
#include "tsdb/model.hpp"

#include "tsdb/text.hpp"

namespace tsdb {

std::string render_span(const TokenSpan& span) {
    return std::to_string(span.start) + ":" + std::to_string(span.end);
}

std::string render_violation(const Violation& v) {
    return v.field + ": " + v.rule + " (" + v.detail + ")";
}

std::vector<Violation> validate_item(const TestItem& item) {
    std::vector<Violation> out;
    if (item.id < 1) {
        out.push_back({"i-id", "id-positive",
                       "item id must be a positive integer, got " + std::to_string(item.id)});
    }
    if (item.date.empty()) {
        out.push_back({"i-date", "date-empty", "date must be a nonempty string"});
    }
    if (item.difficulty < 1) {
        out.push_back({"i-difficulty", "difficulty-range",
                       "difficulty must be >= 1, got " + std::to_string(item.difficulty)});
    }
    if (item.wellformedness < 0 || item.wellformedness > 2) {
        out.push_back({"i-wf", "wellformedness-code",
                       "wellformedness must be 0, 1 or 2, got " +
                           std::to_string(item.wellformedness)});
    }
    if (item.input.empty()) {
        out.push_back({"i-input", "input-empty", "input must be nonempty"});
    } else if (!is_single_spaced(item.input)) {
        out.push_back({"i-input", "input-tokenization",
                       "tokens must be separated by exactly one space"});
    } else {
        int64_t expected = computed_length(item.input);
        if (expected < 1) {
            out.push_back({"i-length", "length-range",
                           "input must contain at least one non-punctuation token"});
        } else if (item.length != expected) {
            out.push_back({"i-length", "length-formula",
                           "length must be " + std::to_string(expected) + " for input \"" +
                               item.input + "\", got " + std::to_string(item.length)});
        }
    }
    return out;
}

std::vector<Violation> validate_span(const AnalysisSpan& span, const TestItem& item) {
    std::vector<Violation> out;
    auto tokens = split_tokens(item.input);
    int64_t n = static_cast<int64_t>(tokens.size());

    bool position_ok = span.position.start >= 0 && span.position.start < span.position.end &&
                       span.position.end <= n;
    if (!position_ok) {
        out.push_back({"a-position", "span-bounds",
                       "position " + render_span(span.position) +
                           " out of bounds for item of " + std::to_string(n) + " tokens"});
    }
    if (span.domain.start < 0 || span.domain.start >= span.domain.end || span.domain.end > n) {
        out.push_back({"a-domain", "span-bounds",
                       "domain " + render_span(span.domain) + " out of bounds for item of " +
                           std::to_string(n) + " tokens"});
    }
    if (position_ok) {
        std::vector<std::string> slice(tokens.begin() + span.position.start,
                                       tokens.begin() + span.position.end);
        std::string expected = join_tokens(slice);
        if (span.instance != expected) {
            out.push_back({"a-instance", "instance-mismatch",
                           "instance \"" + span.instance + "\" does not equal token slice \"" +
                               expected + "\""});
        }
    }
    return out;
}

}  // namespace tsdb
