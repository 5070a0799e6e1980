// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace tsdb {

// A half-open token span: start inclusive, end exclusive, 0-based.
// Rendered "start:end" in files.
struct TokenSpan {
    int64_t start = 0;
    int64_t end = 0;

    friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
    friend auto operator<=>(const TokenSpan&, const TokenSpan&) = default;
};

std::string render_span(const TokenSpan& span);

/// One annotated test input. The input is stored pre-tokenized, tokens
/// separated by exactly one space; length excludes a sentence-final
/// punctuation token.
struct TestItem {
    int64_t id = 0;
    std::string author;
    std::string date;
    std::string register_;  // register is reserved in C++
    std::string format;
    std::string origin;
    int64_t difficulty = 1;
    int64_t wellformedness = 1;  // 0 ill-formed, 1 well-formed, 2 marginal
    std::string category;
    std::string input;
    int64_t length = 0;
    std::string comment;

    friend bool operator==(const TestItem&, const TestItem&) = default;
};

/// One row of the categorial/functional dependency annotation of an item.
struct AnalysisSpan {
    int64_t item_id = 0;
    TokenSpan position;
    std::string instance;  // always equals the designated token slice
    std::string category;
    std::string function;
    TokenSpan domain;

    friend bool operator==(const AnalysisSpan&, const AnalysisSpan&) = default;
};

/// Node in the hierarchical phenomenon classification.
struct Phenomenon {
    int64_t id = 0;
    std::string name;
    std::vector<std::string> supertypes;
    std::vector<std::string> presupposition;
    std::string restrictions;
    std::string interaction;
    std::string purpose;
    std::string author;
    std::string date;
    std::string comment;

    friend bool operator==(const Phenomenon&, const Phenomenon&) = default;
};

struct ItemPhenomenonLink {
    int64_t link_id = 0;
    int64_t item_id = 0;
    int64_t phenomenon_id = 0;
    std::vector<std::pair<std::string, std::string>> parameters;

    friend bool operator==(const ItemPhenomenonLink&, const ItemPhenomenonLink&) = default;
};

/// A positive item grouped with its systematically derived negative twins.
struct TestSet {
    int64_t id = 0;
    std::vector<int64_t> item_ids;  // ordered

    friend bool operator==(const TestSet&, const TestSet&) = default;
};

/// One evaluation pass of an external application.
struct Run {
    int64_t id = 0;
    std::string application;
    std::string date;
    std::string environment;
    std::string comment;

    friend bool operator==(const Run&, const Run&) = default;
};

/// Per-item outcome of a run. time_ms is -1 when unmeasured.
struct ResultRow {
    int64_t run_id = 0;
    int64_t item_id = 0;
    int64_t accepted = 0;
    int64_t readings = 0;
    int64_t time_ms = -1;
    std::string output;
    std::string flags;

    friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

/// One violated validation rule. Violations are data, not errors: the
/// field names the offending attribute, the rule is a stable identifier.
struct Violation {
    std::string field;
    std::string rule;
    std::string detail;

    friend bool operator==(const Violation&, const Violation&) = default;
};

std::string render_violation(const Violation& v);

/// Checks all per-record TestItem invariants. Empty result means valid.
std::vector<Violation> validate_item(const TestItem& item);

/// Checks an AnalysisSpan against its parent item: span and domain bounds
/// plus instance/position coherence. Caller pairs span and item by id.
std::vector<Violation> validate_span(const AnalysisSpan& span, const TestItem& item);

}  // namespace tsdb
