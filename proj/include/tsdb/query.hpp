// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tsdb/storage.hpp"

namespace tsdb {

class QueryError : public Error {
public:
    QueryError(std::string message, size_t offset = std::string::npos)
        : Error(std::move(message)), offset_(offset) {}
    size_t offset() const { return offset_; }

private:
    size_t offset_;
};

enum class CompareOp { eq, ne, lt, le, gt, ge, match, no_match };

std::string compare_op_text(CompareOp op);

struct QueryLiteral {
    enum class Kind { integer, text } kind = Kind::integer;
    int64_t number = 0;
    std::string text;

    friend bool operator==(const QueryLiteral&, const QueryLiteral&) = default;
};

/// Boolean condition tree over attribute comparisons.
struct Condition {
    enum class Kind { compare, conjunction, disjunction, negation } kind = Kind::compare;
    // compare
    std::string attribute;
    CompareOp op = CompareOp::eq;
    QueryLiteral literal;
    // conjunction / disjunction
    std::unique_ptr<Condition> left;
    std::unique_ptr<Condition> right;
    // negation reuses left
};

std::unique_ptr<Condition> clone_condition(const Condition* condition);
bool conditions_equal(const Condition* a, const Condition* b);

/// A parsed query: "select" attr+ ["where" condition].
struct QueryAst {
    std::vector<std::string> projection;
    std::unique_ptr<Condition> condition;  // null when absent

    QueryAst() = default;
    QueryAst(const QueryAst& other)
        : projection(other.projection), condition(clone_condition(other.condition.get())) {}
    QueryAst(QueryAst&&) = default;
    QueryAst& operator=(QueryAst other) {
        projection = std::move(other.projection);
        condition = std::move(other.condition);
        return *this;
    }
};

bool asts_equal(const QueryAst& a, const QueryAst& b);

/// Parses a query against a schema. Attribute names are validated; syntax
/// errors carry the character offset.
QueryAst parse_query(std::string_view text, const Schema& schema);

/// Canonical rendering; parse(render(parse(x))) is a fixpoint.
std::string render_query(const QueryAst& ast);

/// The relations a query touches, closed under the unique connecting
/// paths of the schema join tree, in deterministic join order.
struct JoinStep {
    std::string relation;
    std::string via_attribute;  // empty for the first step

    friend bool operator==(const JoinStep&, const JoinStep&) = default;
};

struct JoinPlan {
    std::vector<JoinStep> steps;

    std::vector<std::string> relation_names() const;
};

JoinPlan plan_query(const QueryAst& ast, const Schema& schema);

/// Evaluation result: projected attribute names over duplicate-free rows,
/// sorted ascending by the leftmost integer column with remaining columns
/// compared lexicographically on their rendered form.
struct ResultTable {
    std::vector<std::string> header;
    std::vector<AttrType> column_types;
    std::vector<Record> rows;

    std::vector<std::string> delimited_lines() const;
    std::string aligned_text(bool with_row_count = true) const;
};

ResultTable evaluate_query(const QueryAst& ast, const JoinPlan& plan, const Database& db);

/// Convenience: parse, plan, evaluate.
ResultTable run_query(std::string_view text, const Database& db);

/// Instantiates a concrete test suite: the items satisfying the condition
/// together with their analysis rows, links, parameters, transitively
/// reachable phenomena, and the sets that remain valid after restriction.
/// Runs and results are profile data and are not copied.
Database instantiate_testsuite(const Database& db, const QueryAst& ast);

}  // namespace tsdb
