// SPDX-License-Identifier: Apache-2.0
#include "tsdb/query.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "tsdb/pattern.hpp"
#include "tsdb/text.hpp"

namespace tsdb {

std::string compare_op_text(CompareOp op) {
    switch (op) {
        case CompareOp::eq: return "=";
        case CompareOp::ne: return "!=";
        case CompareOp::lt: return "<";
        case CompareOp::le: return "<=";
        case CompareOp::gt: return ">";
        case CompareOp::ge: return ">=";
        case CompareOp::match: return "~";
        case CompareOp::no_match: return "!~";
    }
    return "?";
}

std::unique_ptr<Condition> clone_condition(const Condition* condition) {
    if (!condition) return nullptr;
    auto out = std::make_unique<Condition>();
    out->kind = condition->kind;
    out->attribute = condition->attribute;
    out->op = condition->op;
    out->literal = condition->literal;
    out->left = clone_condition(condition->left.get());
    out->right = clone_condition(condition->right.get());
    return out;
}

bool conditions_equal(const Condition* a, const Condition* b) {
    if (!a || !b) return a == b;
    if (a->kind != b->kind) return false;
    if (a->kind == Condition::Kind::compare) {
        return a->attribute == b->attribute && a->op == b->op && a->literal == b->literal;
    }
    return conditions_equal(a->left.get(), b->left.get()) &&
           conditions_equal(a->right.get(), b->right.get());
}

bool asts_equal(const QueryAst& a, const QueryAst& b) {
    return a.projection == b.projection && conditions_equal(a.condition.get(), b.condition.get());
}

// ---------------------------------------------------------------------------
// lexer / parser

namespace {

enum class TokenKind { word, integer, string, op, lparen, rparen, bang, amp, pipe, end };

struct Token {
    TokenKind kind;
    std::string text;
    int64_t number = 0;
    size_t offset = 0;
};

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) {}

    Token next() {
        while (pos_ < text_.size() &&
               std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
        size_t start = pos_;
        if (pos_ >= text_.size()) return {TokenKind::end, "", 0, start};
        char c = text_[pos_];
        if (c == '(') { ++pos_; return {TokenKind::lparen, "(", 0, start}; }
        if (c == ')') { ++pos_; return {TokenKind::rparen, ")", 0, start}; }
        if (c == '&') { ++pos_; return {TokenKind::amp, "&", 0, start}; }
        if (c == '|') { ++pos_; return {TokenKind::pipe, "|", 0, start}; }
        if (c == '!') {
            if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '~') {
                pos_ += 2;
                return {TokenKind::op, "!~", 0, start};
            }
            if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '=') {
                pos_ += 2;
                return {TokenKind::op, "!=", 0, start};
            }
            ++pos_;
            return {TokenKind::bang, "!", 0, start};
        }
        if (c == '=' ) { ++pos_; return {TokenKind::op, "=", 0, start}; }
        if (c == '~') { ++pos_; return {TokenKind::op, "~", 0, start}; }
        if (c == '<' || c == '>') {
            std::string op(1, c);
            ++pos_;
            if (pos_ < text_.size() && text_[pos_] == '=') {
                op += '=';
                ++pos_;
            }
            return {TokenKind::op, op, 0, start};
        }
        if (c == '"') {
            ++pos_;
            std::string value;
            while (pos_ < text_.size() && text_[pos_] != '"') {
                char d = text_[pos_++];
                if (d == '\\') {
                    if (pos_ >= text_.size()) {
                        throw QueryError("unterminated string literal at offset " +
                                             std::to_string(start),
                                         start);
                    }
                    char e = text_[pos_++];
                    switch (e) {
                        case '"': value += '"'; break;
                        case '\\': value += '\\'; break;
                        case 'n': value += '\n'; break;
                        default:
                            throw QueryError("unknown escape \"\\" + std::string(1, e) +
                                                 "\" at offset " + std::to_string(pos_ - 2),
                                             pos_ - 2);
                    }
                } else {
                    value += d;
                }
            }
            if (pos_ >= text_.size()) {
                throw QueryError("unterminated string literal at offset " + std::to_string(start),
                                 start);
            }
            ++pos_;  // closing quote
            return {TokenKind::string, value, 0, start};
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '-' && pos_ + 1 < text_.size() &&
             std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
            size_t begin = pos_;
            if (c == '-') ++pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
            }
            std::string digits(text_.substr(begin, pos_ - begin));
            return {TokenKind::integer, digits, *parse_int(digits), start};
        }
        if (std::islower(static_cast<unsigned char>(c))) {
            size_t begin = pos_;
            while (pos_ < text_.size()) {
                char d = text_[pos_];
                if (std::islower(static_cast<unsigned char>(d)) ||
                    std::isdigit(static_cast<unsigned char>(d)) || d == '-') {
                    ++pos_;
                } else {
                    break;
                }
            }
            return {TokenKind::word, std::string(text_.substr(begin, pos_ - begin)), 0, start};
        }
        throw QueryError("unexpected character \"" + std::string(1, c) + "\" at offset " +
                             std::to_string(start),
                         start);
    }

private:
    std::string_view text_;
    size_t pos_ = 0;
};

class QueryParser {
public:
    QueryParser(std::string_view text, const Schema& schema)
        : lexer_(text), schema_(schema) {
        advance();
    }

    QueryAst parse() {
        expect_word("select");
        QueryAst ast;
        while (current_.kind == TokenKind::word && current_.text != "where") {
            ast.projection.push_back(take_attribute());
        }
        if (ast.projection.empty()) {
            throw QueryError("select needs at least one attribute at offset " +
                                 std::to_string(current_.offset),
                             current_.offset);
        }
        if (current_.kind == TokenKind::word && current_.text == "where") {
            advance();
            ast.condition = parse_disjunction();
        }
        if (current_.kind != TokenKind::end) {
            throw QueryError("unexpected \"" + current_.text + "\" at offset " +
                                 std::to_string(current_.offset),
                             current_.offset);
        }
        return ast;
    }

private:
    void advance() { current_ = lexer_.next(); }

    void expect_word(const std::string& word) {
        if (current_.kind != TokenKind::word || current_.text != word) {
            throw QueryError("expected \"" + word + "\" at offset " +
                                 std::to_string(current_.offset),
                             current_.offset);
        }
        advance();
    }

    std::string take_attribute() {
        if (current_.kind != TokenKind::word) {
            throw QueryError("expected an attribute name at offset " +
                                 std::to_string(current_.offset),
                             current_.offset);
        }
        std::string name = current_.text;
        if (!schema_.has_attribute(name)) {
            throw QueryError("unknown attribute \"" + name + "\" at offset " +
                                 std::to_string(current_.offset),
                             current_.offset);
        }
        advance();
        return name;
    }

    std::unique_ptr<Condition> parse_disjunction() {
        auto left = parse_conjunction();
        while (current_.kind == TokenKind::pipe) {
            advance();
            auto node = std::make_unique<Condition>();
            node->kind = Condition::Kind::disjunction;
            node->left = std::move(left);
            node->right = parse_conjunction();
            left = std::move(node);
        }
        return left;
    }

    std::unique_ptr<Condition> parse_conjunction() {
        auto left = parse_term();
        while (current_.kind == TokenKind::amp) {
            advance();
            auto node = std::make_unique<Condition>();
            node->kind = Condition::Kind::conjunction;
            node->left = std::move(left);
            node->right = parse_term();
            left = std::move(node);
        }
        return left;
    }

    std::unique_ptr<Condition> parse_term() {
        if (current_.kind == TokenKind::bang) {
            advance();
            auto node = std::make_unique<Condition>();
            node->kind = Condition::Kind::negation;
            node->left = parse_term();
            return node;
        }
        if (current_.kind == TokenKind::lparen) {
            advance();
            auto inner = parse_disjunction();
            if (current_.kind != TokenKind::rparen) {
                throw QueryError("expected \")\" at offset " + std::to_string(current_.offset),
                                 current_.offset);
            }
            advance();
            return inner;
        }
        return parse_comparison();
    }

    std::unique_ptr<Condition> parse_comparison() {
        std::string attribute = take_attribute();
        if (current_.kind != TokenKind::op) {
            throw QueryError("expected a comparison operator at offset " +
                                 std::to_string(current_.offset),
                             current_.offset);
        }
        std::string op_text = current_.text;
        advance();

        auto node = std::make_unique<Condition>();
        node->kind = Condition::Kind::compare;
        node->attribute = attribute;
        if (op_text == "=") node->op = CompareOp::eq;
        else if (op_text == "!=") node->op = CompareOp::ne;
        else if (op_text == "<") node->op = CompareOp::lt;
        else if (op_text == "<=") node->op = CompareOp::le;
        else if (op_text == ">") node->op = CompareOp::gt;
        else if (op_text == ">=") node->op = CompareOp::ge;
        else if (op_text == "~") node->op = CompareOp::match;
        else node->op = CompareOp::no_match;

        size_t literal_offset = current_.offset;
        if (current_.kind == TokenKind::integer) {
            node->literal.kind = QueryLiteral::Kind::integer;
            node->literal.number = current_.number;
            advance();
        } else if (current_.kind == TokenKind::string) {
            node->literal.kind = QueryLiteral::Kind::text;
            node->literal.text = current_.text;
            advance();
        } else {
            throw QueryError("expected an integer or quoted string at offset " +
                                 std::to_string(current_.offset),
                             current_.offset);
        }

        AttrType type = *schema_.attribute_type(attribute);
        bool is_match = node->op == CompareOp::match || node->op == CompareOp::no_match;
        if (is_match) {
            if (node->literal.kind != QueryLiteral::Kind::text) {
                throw QueryError("\"" + op_text + "\" needs a quoted pattern at offset " +
                                     std::to_string(literal_offset),
                                 literal_offset);
            }
        } else if (type == AttrType::integer) {
            if (node->literal.kind != QueryLiteral::Kind::integer) {
                throw QueryError("attribute \"" + attribute +
                                     "\" is an integer; expected an integer literal at offset " +
                                     std::to_string(literal_offset),
                                 literal_offset);
            }
        } else if (type == AttrType::string) {
            if (node->literal.kind != QueryLiteral::Kind::text) {
                throw QueryError("attribute \"" + attribute +
                                     "\" is a string; expected a quoted literal at offset " +
                                     std::to_string(literal_offset),
                                 literal_offset);
            }
        } else {
            if (node->literal.kind != QueryLiteral::Kind::text) {
                throw QueryError("attribute \"" + attribute +
                                     "\" is a position; expected a quoted \"start:end\" literal "
                                     "at offset " +
                                     std::to_string(literal_offset),
                                 literal_offset);
            }
            try {
                parse_value(node->literal.text, AttrType::position);
            } catch (const StorageError&) {
                throw QueryError("\"" + node->literal.text +
                                     "\" is not a start:end position at offset " +
                                     std::to_string(literal_offset),
                                 literal_offset);
            }
        }
        return node;
    }

    Lexer lexer_;
    const Schema& schema_;
    Token current_;
};

}  // namespace

QueryAst parse_query(std::string_view text, const Schema& schema) {
    QueryParser parser(text, schema);
    return parser.parse();
}

// ---------------------------------------------------------------------------
// rendering

namespace {

std::string quote_literal(const std::string& text) {
    std::string out = "\"";
    for (char c : text) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            default: out += c;
        }
    }
    out += '"';
    return out;
}

// precedence: disjunction 0, conjunction 1, negation/compare 2
int condition_precedence(const Condition& c) {
    switch (c.kind) {
        case Condition::Kind::disjunction: return 0;
        case Condition::Kind::conjunction: return 1;
        default: return 2;
    }
}

void render_condition(const Condition& c, int parent_precedence, std::string& out) {
    int precedence = condition_precedence(c);
    bool parens = precedence < parent_precedence;
    if (parens) out += '(';
    switch (c.kind) {
        case Condition::Kind::compare:
            out += c.attribute + " " + compare_op_text(c.op) + " ";
            if (c.literal.kind == QueryLiteral::Kind::integer) {
                out += std::to_string(c.literal.number);
            } else {
                out += quote_literal(c.literal.text);
            }
            break;
        case Condition::Kind::conjunction:
            render_condition(*c.left, 1, out);
            out += " & ";
            render_condition(*c.right, 2, out);
            break;
        case Condition::Kind::disjunction:
            render_condition(*c.left, 0, out);
            out += " | ";
            render_condition(*c.right, 1, out);
            break;
        case Condition::Kind::negation:
            out += '!';
            render_condition(*c.left, 3, out);
            break;
    }
    if (parens) out += ')';
}

}  // namespace

std::string render_query(const QueryAst& ast) {
    std::string out = "select";
    for (const auto& attr : ast.projection) out += " " + attr;
    if (ast.condition) {
        out += " where ";
        render_condition(*ast.condition, 0, out);
    }
    return out;
}

// ---------------------------------------------------------------------------
// planning

namespace {

void collect_attributes(const Condition* c, std::vector<std::string>& out) {
    if (!c) return;
    if (c->kind == Condition::Kind::compare) {
        out.push_back(c->attribute);
        return;
    }
    collect_attributes(c->left.get(), out);
    collect_attributes(c->right.get(), out);
}

}  // namespace

std::vector<std::string> JoinPlan::relation_names() const {
    std::vector<std::string> out;
    out.reserve(steps.size());
    for (const auto& step : steps) out.push_back(step.relation);
    return out;
}

JoinPlan plan_query(const QueryAst& ast, const Schema& schema) {
    std::vector<std::string> attributes = ast.projection;
    collect_attributes(ast.condition.get(), attributes);
    if (attributes.empty()) throw QueryError("query mentions no attributes");

    std::set<std::string> mentioned;
    for (const auto& attr : attributes) {
        auto owner = schema.owner_of_attribute(attr);
        if (!owner) throw QueryError("unknown attribute \"" + attr + "\"");
        mentioned.insert(*owner);
    }

    // close under the unique tree paths connecting the mentioned relations
    std::set<std::string> closure;
    const std::string& anchor = *mentioned.begin();
    for (const auto& relation : mentioned) {
        for (auto& node : schema.path_between(anchor, relation)) {
            closure.insert(std::move(node));
        }
    }

    // deterministic join order: start from the closure relation that comes
    // first in the schema, then repeatedly append the first declared
    // relation adjacent to the joined set
    std::vector<std::string> ordered;
    for (const auto& decl : schema.relations()) {
        if (closure.contains(decl.name)) ordered.push_back(decl.name);
    }

    JoinPlan plan;
    std::set<std::string> joined;
    plan.steps.push_back({ordered.front(), ""});
    joined.insert(ordered.front());
    while (joined.size() < ordered.size()) {
        bool progressed = false;
        for (const auto& name : ordered) {
            if (joined.contains(name)) continue;
            for (const auto* edge : schema.edges_of(name)) {
                const std::string& other = edge->left == name ? edge->right : edge->left;
                if (joined.contains(other)) {
                    plan.steps.push_back({name, edge->attribute});
                    joined.insert(name);
                    progressed = true;
                    break;
                }
            }
            if (progressed) break;
        }
        if (!progressed) {
            throw QueryError("internal: join closure is not connected");
        }
    }
    return plan;
}

// ---------------------------------------------------------------------------
// evaluation

namespace {

struct JoinedColumns {
    std::vector<std::string> names;
    std::vector<AttrType> types;

    std::optional<size_t> index_of(const std::string& name) const {
        for (size_t i = 0; i < names.size(); ++i) {
            if (names[i] == name) return i;
        }
        return std::nullopt;
    }
};

// compiled comparison: the pattern is built once per evaluation
struct CompiledCompare {
    const Condition* node;
    std::optional<Pattern> pattern;
};

class ConditionEvaluator {
public:
    ConditionEvaluator(const Condition* root, const JoinedColumns& columns) : columns_(columns) {
        compile(root);
    }

    bool matches(const Condition* c, const Record& row) const {
        switch (c->kind) {
            case Condition::Kind::compare: return compare(c, row);
            case Condition::Kind::conjunction:
                return matches(c->left.get(), row) && matches(c->right.get(), row);
            case Condition::Kind::disjunction:
                return matches(c->left.get(), row) || matches(c->right.get(), row);
            case Condition::Kind::negation: return !matches(c->left.get(), row);
        }
        return false;
    }

private:
    void compile(const Condition* c) {
        if (!c) return;
        if (c->kind == Condition::Kind::compare) {
            if (c->op == CompareOp::match || c->op == CompareOp::no_match) {
                try {
                    patterns_.emplace(c, Pattern(c->literal.text));
                } catch (const PatternError& e) {
                    throw QueryError("invalid pattern " + quote_literal(c->literal.text) + ": " +
                                     e.what());
                }
            }
            return;
        }
        compile(c->left.get());
        compile(c->right.get());
    }

    bool compare(const Condition* c, const Record& row) const {
        size_t column = *columns_.index_of(c->attribute);
        const Value& value = row[column];
        if (c->op == CompareOp::match || c->op == CompareOp::no_match) {
            bool hit = patterns_.at(c).search(render_value(value));
            return c->op == CompareOp::match ? hit : !hit;
        }
        int ordering;
        if (std::holds_alternative<int64_t>(value)) {
            int64_t lhs = std::get<int64_t>(value);
            int64_t rhs = c->literal.number;
            ordering = lhs < rhs ? -1 : lhs > rhs ? 1 : 0;
        } else if (std::holds_alternative<TokenSpan>(value)) {
            TokenSpan lhs = std::get<TokenSpan>(value);
            TokenSpan rhs = std::get<TokenSpan>(parse_value(c->literal.text, AttrType::position));
            ordering = lhs < rhs ? -1 : rhs < lhs ? 1 : 0;
        } else {
            const std::string& lhs = std::get<std::string>(value);
            const std::string& rhs = c->literal.text;
            ordering = lhs.compare(rhs);
            ordering = ordering < 0 ? -1 : ordering > 0 ? 1 : 0;
        }
        switch (c->op) {
            case CompareOp::eq: return ordering == 0;
            case CompareOp::ne: return ordering != 0;
            case CompareOp::lt: return ordering < 0;
            case CompareOp::le: return ordering <= 0;
            case CompareOp::gt: return ordering > 0;
            case CompareOp::ge: return ordering >= 0;
            default: return false;
        }
    }

    const JoinedColumns& columns_;
    std::map<const Condition*, Pattern> patterns_;
};

// total order used for dedup and output: leftmost integer column numeric,
// remaining columns by rendered text
struct RowOrder {
    const std::vector<AttrType>* types;

    std::optional<size_t> primary_column() const {
        for (size_t i = 0; i < types->size(); ++i) {
            if ((*types)[i] == AttrType::integer) return i;
        }
        return std::nullopt;
    }

    bool operator()(const Record& a, const Record& b) const {
        auto primary = primary_column();
        if (primary) {
            int64_t lhs = std::get<int64_t>(a[*primary]);
            int64_t rhs = std::get<int64_t>(b[*primary]);
            if (lhs != rhs) return lhs < rhs;
        }
        for (size_t i = 0; i < a.size(); ++i) {
            if (primary && i == *primary) continue;
            std::string lhs = render_value(a[i]);
            std::string rhs = render_value(b[i]);
            if (lhs != rhs) return lhs < rhs;
        }
        return false;
    }
};

}  // namespace

ResultTable evaluate_query(const QueryAst& ast, const JoinPlan& plan, const Database& db) {
    const Schema& schema = db.schema();

    JoinedColumns columns;
    std::vector<Record> rows;

    for (size_t step_index = 0; step_index < plan.steps.size(); ++step_index) {
        const JoinStep& step = plan.steps[step_index];
        const RelationDecl* decl = schema.relation(step.relation);
        const auto& records = db.records(step.relation);

        if (step_index == 0) {
            for (const auto& attr : decl->attributes) {
                columns.names.push_back(attr.name);
                columns.types.push_back(attr.type);
            }
            rows = records;
            continue;
        }

        size_t left_key = *columns.index_of(step.via_attribute);
        size_t right_key = *decl->attribute_index(step.via_attribute);

        // hash the new relation's records by key, probe the intermediate
        std::unordered_multimap<std::string, size_t> by_key;
        by_key.reserve(records.size());
        for (size_t i = 0; i < records.size(); ++i) {
            by_key.emplace(render_value(records[i][right_key]), i);
        }

        std::vector<Record> joined;
        for (const auto& row : rows) {
            auto [begin, end] = by_key.equal_range(render_value(row[left_key]));
            for (auto it = begin; it != end; ++it) {
                Record combined = row;
                const Record& addition = records[it->second];
                for (size_t i = 0; i < addition.size(); ++i) {
                    if (i == right_key) continue;  // shared key column collapses
                    combined.push_back(addition[i]);
                }
                joined.push_back(std::move(combined));
            }
        }
        for (size_t i = 0; i < decl->attributes.size(); ++i) {
            if (i == right_key) continue;
            columns.names.push_back(decl->attributes[i].name);
            columns.types.push_back(decl->attributes[i].type);
        }
        rows = std::move(joined);
    }

    ResultTable table;
    table.header = ast.projection;
    std::vector<size_t> projected;
    for (const auto& attr : ast.projection) {
        auto idx = columns.index_of(attr);
        if (!idx) throw QueryError("attribute \"" + attr + "\" is not covered by the plan");
        projected.push_back(*idx);
        table.column_types.push_back(columns.types[*idx]);
    }

    if (ast.condition) {
        ConditionEvaluator evaluator(ast.condition.get(), columns);
        std::vector<Record> kept;
        for (auto& row : rows) {
            if (evaluator.matches(ast.condition.get(), row)) kept.push_back(std::move(row));
        }
        rows = std::move(kept);
    }

    for (const auto& row : rows) {
        Record out;
        out.reserve(projected.size());
        for (size_t idx : projected) out.push_back(row[idx]);
        table.rows.push_back(std::move(out));
    }

    RowOrder order{&table.column_types};
    std::sort(table.rows.begin(), table.rows.end(), order);
    table.rows.erase(std::unique(table.rows.begin(), table.rows.end()), table.rows.end());
    return table;
}

ResultTable run_query(std::string_view text, const Database& db) {
    QueryAst ast = parse_query(text, db.schema());
    JoinPlan plan = plan_query(ast, db.schema());
    return evaluate_query(ast, plan, db);
}

std::vector<std::string> ResultTable::delimited_lines() const {
    std::vector<std::string> lines;
    lines.reserve(rows.size());
    for (const auto& row : rows) {
        std::vector<std::string> fields;
        fields.reserve(row.size());
        for (const auto& value : row) fields.push_back(render_value(value));
        lines.push_back(join_record_line(fields));
    }
    return lines;
}

std::string ResultTable::aligned_text(bool with_row_count) const {
    std::vector<size_t> widths(header.size());
    for (size_t i = 0; i < header.size(); ++i) widths[i] = header[i].size();
    std::vector<std::vector<std::string>> rendered;
    rendered.reserve(rows.size());
    for (const auto& row : rows) {
        std::vector<std::string> cells;
        for (size_t i = 0; i < row.size(); ++i) {
            std::string cell = render_value(row[i]);
            // keep the table rectangular in the face of embedded newlines
            for (auto& c : cell) {
                if (c == '\n') c = ' ';
            }
            widths[i] = std::max(widths[i], cell.size());
            cells.push_back(std::move(cell));
        }
        rendered.push_back(std::move(cells));
    }

    std::ostringstream out;
    auto emit_row = [&](const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) {
            out << cells[i];
            if (i + 1 < cells.size()) {
                out << std::string(widths[i] - cells[i].size() + 2, ' ');
            }
        }
        out << '\n';
    };
    emit_row(header);
    std::string separator;
    for (size_t i = 0; i < header.size(); ++i) {
        separator += std::string(widths[i], '-');
        if (i + 1 < header.size()) separator += "  ";
    }
    out << separator << '\n';
    for (const auto& cells : rendered) emit_row(cells);
    if (with_row_count) {
        out << '(' << rows.size() << (rows.size() == 1 ? " row)" : " rows)") << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// test suite instantiation

Database instantiate_testsuite(const Database& db, const QueryAst& ast) {
    QueryAst selection;
    selection.projection = {"i-id"};
    selection.condition = clone_condition(ast.condition.get());
    JoinPlan plan = plan_query(selection, db.schema());
    ResultTable table = evaluate_query(selection, plan, db);

    std::set<int64_t> item_ids;
    for (const auto& row : table.rows) item_ids.insert(std::get<int64_t>(row[0]));

    Database out(db.schema(), db.language());
    out.set_taxonomy(db.taxonomy());

    for (const auto& record : db.records("item")) {
        if (item_ids.contains(std::get<int64_t>(record[0]))) {
            out.records_mutable("item").push_back(record);
        }
    }
    for (const auto& record : db.records("analysis")) {
        if (item_ids.contains(std::get<int64_t>(record[0]))) {
            out.records_mutable("analysis").push_back(record);
        }
    }

    std::set<int64_t> link_ids;
    std::set<int64_t> phenomenon_ids;
    for (const auto& record : db.records("item-phenomenon")) {
        if (item_ids.contains(std::get<int64_t>(record[1]))) {
            out.records_mutable("item-phenomenon").push_back(record);
            link_ids.insert(std::get<int64_t>(record[0]));
            phenomenon_ids.insert(std::get<int64_t>(record[2]));
        }
    }
    for (const auto& record : db.records("parameter")) {
        if (link_ids.contains(std::get<int64_t>(record[0]))) {
            out.records_mutable("parameter").push_back(record);
        }
    }

    // phenomena reachable from the links, closed over supertype and
    // presupposition references that resolve to phenomenon records
    std::map<std::string, const Record*> phenomenon_by_name;
    std::map<int64_t, const Record*> phenomenon_by_id;
    for (const auto& record : db.records("phenomenon")) {
        phenomenon_by_name.emplace(std::get<std::string>(record[1]), &record);
        phenomenon_by_id.emplace(std::get<int64_t>(record[0]), &record);
    }
    std::vector<int64_t> frontier(phenomenon_ids.begin(), phenomenon_ids.end());
    while (!frontier.empty()) {
        int64_t id = frontier.back();
        frontier.pop_back();
        auto it = phenomenon_by_id.find(id);
        if (it == phenomenon_by_id.end()) continue;
        Phenomenon p = record_to_phenomenon(*it->second);
        auto follow = [&](const std::vector<std::string>& names) {
            for (const auto& name : names) {
                auto target = phenomenon_by_name.find(name);
                if (target == phenomenon_by_name.end()) continue;
                int64_t target_id = std::get<int64_t>((*target->second)[0]);
                if (phenomenon_ids.insert(target_id).second) frontier.push_back(target_id);
            }
        };
        follow(p.supertypes);
        follow(p.presupposition);
    }
    for (const auto& record : db.records("phenomenon")) {
        if (phenomenon_ids.contains(std::get<int64_t>(record[0]))) {
            out.records_mutable("phenomenon").push_back(record);
        }
    }

    // sets restricted to surviving members; a restricted set must keep at
    // least two members, one of them well-formed, to stay valid
    std::map<int64_t, int64_t> wf_by_item;
    for (const auto& record : out.records("item")) {
        wf_by_item[std::get<int64_t>(record[0])] = std::get<int64_t>(record[7]);
    }
    std::map<int64_t, std::vector<const Record*>> sets;
    std::vector<int64_t> set_order;
    for (const auto& record : db.records("set")) {
        int64_t set_id = std::get<int64_t>(record[0]);
        if (!sets.contains(set_id)) set_order.push_back(set_id);
        if (item_ids.contains(std::get<int64_t>(record[1]))) {
            sets[set_id].push_back(&record);
        } else {
            sets[set_id];
        }
    }
    for (int64_t set_id : set_order) {
        const auto& members = sets[set_id];
        if (members.size() < 2) continue;
        bool has_wellformed = false;
        for (const auto* record : members) {
            auto it = wf_by_item.find(std::get<int64_t>((*record)[1]));
            if (it != wf_by_item.end() && it->second == 1) has_wellformed = true;
        }
        if (!has_wellformed) continue;
        for (const auto* record : members) {
            out.records_mutable("set").push_back(*record);
        }
    }
    return out;
}

}  // namespace tsdb
