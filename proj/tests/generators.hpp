// SPDX-License-Identifier: Apache-2.0
// Random database and query generators plus the brute-force cross-product
// oracle the query engine is checked against. Test-only code: the oracle
// deliberately stays naive and independent of the evaluator's join path.
#pragma once

#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "tsdb/pattern.hpp"
#include "tsdb/query.hpp"
#include "tsdb/storage.hpp"
#include "tsdb/text.hpp"

namespace tsdb::testgen {

inline const std::vector<std::string> kStringPool = {
    "NP_sg", "V_3-sg", "PRON_sg", "PRON_pl", "subj", "func", "S", "NP",
    "a",     "",       "x y",     "C_Agreement", "issco", "jan-95", "formal", "none"};

inline const std::vector<std::string> kPatternPool = {
    "^N", "sg$", "[0-9]+", "a|b", "^PRON", ".", "N.*g", "x", "^S$", "[a-m]"};

inline const std::vector<std::string> kInputPool = {
    "L' ingénieur vient .",
    "Der Manager arbeitet .",
    "Der Manager hält den Vortrag .",
    "He saw the boy .",
    "Il vient .",
    "word",
};

// A structurally well-typed database; records respect the schema but not
// the model rules, and foreign keys may dangle.
inline Database loose_database(std::mt19937_64& rng, size_t max_rows = 12) {
    Database db(builtin_schema(), "en");
    auto random_string = [&] { return kStringPool[rng() % kStringPool.size()]; };
    auto random_span = [&] {
        int64_t start = static_cast<int64_t>(rng() % 5);
        return TokenSpan{start, start + 1 + static_cast<int64_t>(rng() % 3)};
    };
    for (const auto& decl : db.schema().relations()) {
        size_t rows = rng() % (max_rows + 1);
        auto keys = decl.key_indices();
        std::set<std::string> used_keys;
        for (size_t row = 0; row < rows; ++row) {
            Record record;
            for (const auto& attr : decl.attributes) {
                switch (attr.type) {
                    case AttrType::integer:
                        // small ids so joins frequently match
                        record.emplace_back(static_cast<int64_t>(rng() % (max_rows + 3)));
                        break;
                    case AttrType::string: record.emplace_back(random_string()); break;
                    case AttrType::position: record.emplace_back(random_span()); break;
                }
            }
            std::string key;
            for (size_t idx : keys) key += render_value(record[idx]) + "\x1f";
            if (!keys.empty() && !used_keys.insert(key).second) continue;
            db.records_mutable(decl.name).push_back(std::move(record));
        }
    }
    return db;
}

// Random well-typed query whose attributes come from at most three
// relations, so the oracle's cross product stays tractable.
inline QueryAst random_query(std::mt19937_64& rng, const Schema& schema) {
    std::vector<const RelationDecl*> chosen;
    size_t relation_count = 1 + rng() % 2 + (rng() % 8 == 0 ? 1 : 0);
    while (chosen.size() < relation_count) {
        const auto& decl = schema.relations()[rng() % schema.relations().size()];
        bool seen = false;
        for (const auto* c : chosen) seen |= c == &decl;
        if (!seen) chosen.push_back(&decl);
    }
    auto random_attribute = [&]() -> const AttributeDecl& {
        const auto* decl = chosen[rng() % chosen.size()];
        return decl->attributes[rng() % decl->attributes.size()];
    };

    QueryAst ast;
    size_t projection_size = 1 + rng() % 3;
    for (size_t i = 0; i < projection_size; ++i) {
        ast.projection.push_back(random_attribute().name);
    }

    std::function<std::unique_ptr<Condition>(int)> random_condition =
        [&](int depth) -> std::unique_ptr<Condition> {
        auto node = std::make_unique<Condition>();
        int pick = depth <= 0 ? 0 : static_cast<int>(rng() % 10);
        if (pick < 6) {
            node->kind = Condition::Kind::compare;
            const AttributeDecl& attr = random_attribute();
            node->attribute = attr.name;
            bool use_match = rng() % 4 == 0;
            if (use_match) {
                node->op = rng() % 2 ? CompareOp::match : CompareOp::no_match;
                node->literal.kind = QueryLiteral::Kind::text;
                node->literal.text = kPatternPool[rng() % kPatternPool.size()];
            } else {
                const CompareOp ops[] = {CompareOp::eq, CompareOp::ne, CompareOp::lt,
                                         CompareOp::le, CompareOp::gt, CompareOp::ge};
                node->op = ops[rng() % 6];
                switch (attr.type) {
                    case AttrType::integer:
                        node->literal.kind = QueryLiteral::Kind::integer;
                        node->literal.number = static_cast<int64_t>(rng() % 16) - 1;
                        break;
                    case AttrType::string:
                        node->literal.kind = QueryLiteral::Kind::text;
                        node->literal.text = kStringPool[rng() % kStringPool.size()];
                        break;
                    case AttrType::position: {
                        node->literal.kind = QueryLiteral::Kind::text;
                        int64_t start = static_cast<int64_t>(rng() % 5);
                        node->literal.text = std::to_string(start) + ":" +
                                             std::to_string(start + 1 + rng() % 3);
                        break;
                    }
                }
            }
            return node;
        }
        if (pick < 8) {
            node->kind = Condition::Kind::conjunction;
        } else if (pick < 9) {
            node->kind = Condition::Kind::disjunction;
        } else {
            node->kind = Condition::Kind::negation;
            node->left = random_condition(depth - 1);
            return node;
        }
        node->left = random_condition(depth - 1);
        node->right = random_condition(depth - 1);
        return node;
    };
    if (rng() % 5 != 0) ast.condition = random_condition(2);
    return ast;
}

// --- brute-force oracle ----------------------------------------------------

using NamedRow = std::map<std::string, Value>;

inline bool oracle_condition(const Condition* c, const NamedRow& row) {
    switch (c->kind) {
        case Condition::Kind::conjunction:
            return oracle_condition(c->left.get(), row) && oracle_condition(c->right.get(), row);
        case Condition::Kind::disjunction:
            return oracle_condition(c->left.get(), row) || oracle_condition(c->right.get(), row);
        case Condition::Kind::negation:
            return !oracle_condition(c->left.get(), row);
        case Condition::Kind::compare: break;
    }
    const Value& value = row.at(c->attribute);
    if (c->op == CompareOp::match || c->op == CompareOp::no_match) {
        bool hit = Pattern(c->literal.text).search(render_value(value));
        return c->op == CompareOp::match ? hit : !hit;
    }
    int ordering = 0;
    if (std::holds_alternative<int64_t>(value)) {
        int64_t lhs = std::get<int64_t>(value);
        ordering = lhs < c->literal.number ? -1 : lhs > c->literal.number ? 1 : 0;
    } else if (std::holds_alternative<TokenSpan>(value)) {
        TokenSpan lhs = std::get<TokenSpan>(value);
        TokenSpan rhs = std::get<TokenSpan>(parse_value(c->literal.text, AttrType::position));
        ordering = lhs < rhs ? -1 : rhs < lhs ? 1 : 0;
    } else {
        int cmp = std::get<std::string>(value).compare(c->literal.text);
        ordering = cmp < 0 ? -1 : cmp > 0 ? 1 : 0;
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

/// Full cross product over the plan relations, filtered on every join-edge
/// key equality and the condition, projected, deduplicated. Returns the
/// set of "@"-delimited projected rows.
inline std::set<std::string> oracle_rows(const QueryAst& ast,
                                         const std::vector<std::string>& plan_relations,
                                         const Database& db) {
    const Schema& schema = db.schema();
    std::set<std::string> relation_set(plan_relations.begin(), plan_relations.end());

    struct EdgeCheck {
        std::string left, right, attribute;
    };
    std::vector<EdgeCheck> edges;
    for (const auto& edge : schema.join_edges()) {
        if (relation_set.contains(edge.left) && relation_set.contains(edge.right)) {
            edges.push_back({edge.left, edge.right, edge.attribute});
        }
    }

    std::set<std::string> out;
    std::map<std::string, const Record*> assignment;
    std::function<void(size_t)> descend = [&](size_t index) {
        if (index == plan_relations.size()) {
            for (const auto& edge : edges) {
                const RelationDecl* left = schema.relation(edge.left);
                const RelationDecl* right = schema.relation(edge.right);
                const Value& a = (*assignment.at(edge.left))[*left->attribute_index(edge.attribute)];
                const Value& b =
                    (*assignment.at(edge.right))[*right->attribute_index(edge.attribute)];
                if (!(a == b)) return;
            }
            NamedRow row;
            for (const auto& name : plan_relations) {
                const RelationDecl* decl = schema.relation(name);
                const Record& record = *assignment.at(name);
                for (size_t i = 0; i < decl->attributes.size(); ++i) {
                    row[decl->attributes[i].name] = record[i];
                }
            }
            if (ast.condition && !oracle_condition(ast.condition.get(), row)) return;
            std::vector<std::string> fields;
            for (const auto& attr : ast.projection) fields.push_back(render_value(row.at(attr)));
            out.insert(join_record_line(fields));
            return;
        }
        const std::string& name = plan_relations[index];
        for (const auto& record : db.records(name)) {
            assignment[name] = &record;
            descend(index + 1);
        }
        assignment.erase(name);
    };
    descend(0);
    return out;
}

/// The documented output order: ascending by the leftmost integer column,
/// ties decided by the remaining columns' rendered text.
inline bool table_is_sorted_and_unique(const ResultTable& table) {
    std::optional<size_t> primary;
    for (size_t i = 0; i < table.column_types.size(); ++i) {
        if (table.column_types[i] == AttrType::integer) {
            primary = i;
            break;
        }
    }
    auto less = [&](const Record& a, const Record& b) {
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
    };
    for (size_t i = 1; i < table.rows.size(); ++i) {
        if (!less(table.rows[i - 1], table.rows[i])) return false;
    }
    return true;
}

// A database every record of which obeys the model rules, for properties
// that require check_consistency to start clean.
inline Database consistent_database(std::mt19937_64& rng) {
    Database db(builtin_schema(), "fr");
    db.set_taxonomy({"C_Complementation", "C_Agreement"});

    size_t item_count = 1 + rng() % 8;
    for (size_t i = 0; i < item_count; ++i) {
        TestItem item;
        item.id = static_cast<int64_t>(i + 1);
        item.author = "gen";
        item.date = "jan-95";
        item.register_ = "formal";
        item.format = "none";
        item.origin = "invented";
        item.difficulty = 1 + rng() % 3;
        item.wellformedness = rng() % 3;
        item.category = "S";
        item.input = kInputPool[rng() % kInputPool.size()];
        item.length = computed_length(item.input);
        insert_record(db, "item", item_to_record(item));

        auto tokens = split_tokens(item.input);
        size_t span_count = rng() % 3;
        for (size_t s = 0; s < span_count; ++s) {
            AnalysisSpan span;
            span.item_id = item.id;
            int64_t start = static_cast<int64_t>(rng() % tokens.size());
            int64_t end = start + 1 + static_cast<int64_t>(rng() % (tokens.size() - start));
            span.position = {start, end};
            std::vector<std::string> slice(tokens.begin() + start, tokens.begin() + end);
            span.instance = join_tokens(slice);
            span.category = kStringPool[rng() % 4];
            span.function = rng() % 2 ? "subj" : "func";
            span.domain = {0, static_cast<int64_t>(tokens.size())};
            insert_record(db, "analysis", span_to_record(span));
        }
    }

    size_t phenomenon_count = rng() % 4;
    std::vector<std::string> names;
    for (size_t i = 0; i < phenomenon_count; ++i) {
        Phenomenon p;
        p.id = static_cast<int64_t>(i + 1);
        p.name = "P" + std::to_string(i + 1);
        if (!names.empty() && rng() % 2) p.supertypes = {names[rng() % names.size()]};
        if (rng() % 2) p.supertypes.push_back("C_Complementation");
        if (!names.empty() && rng() % 3 == 0) p.presupposition = {names[rng() % names.size()]};
        p.restrictions = "neutral";
        p.interaction = "none";
        p.purpose = "test";
        p.author = "gen";
        p.date = "jan-95";
        insert_record(db, "phenomenon", phenomenon_to_record(p));
        names.push_back(p.name);
    }

    std::set<std::pair<int64_t, int64_t>> pairs;
    size_t link_count = phenomenon_count == 0 ? 0 : rng() % 6;
    for (size_t i = 0; i < link_count; ++i) {
        int64_t item_id = 1 + rng() % item_count;
        int64_t phenomenon_id = 1 + rng() % phenomenon_count;
        if (!pairs.insert({item_id, phenomenon_id}).second) continue;
        int64_t link_id =
            insert_record(db, "item-phenomenon", Record{int64_t{0}, item_id, phenomenon_id});
        if (rng() % 2) {
            insert_record(db, "parameter", Record{link_id, std::string("agr-type"),
                                                  kStringPool[rng() % kStringPool.size()]});
        }
    }

    // one valid set when a well-formed item exists to anchor it
    std::vector<int64_t> wellformed;
    for (const auto& record : db.records("item")) {
        if (std::get<int64_t>(record[7]) == 1) wellformed.push_back(std::get<int64_t>(record[0]));
    }
    if (!wellformed.empty() && item_count >= 2 && rng() % 2) {
        int64_t anchor = wellformed[rng() % wellformed.size()];
        std::set<int64_t> members{anchor};
        while (members.size() < 2) members.insert(1 + rng() % item_count);
        for (int64_t member : members) {
            insert_record(db, "set", Record{int64_t{1}, member});
        }
    }

    size_t run_count = rng() % 2;
    for (size_t i = 0; i < run_count; ++i) {
        int64_t run_id = insert_record(
            db, "run", run_to_record({0, "mock", "jan-95", "test", ""}));
        for (size_t item = 1; item <= item_count; ++item) {
            if (rng() % 2) continue;
            ResultRow row;
            row.run_id = run_id;
            row.item_id = static_cast<int64_t>(item);
            row.accepted = rng() % 2;
            row.readings = row.accepted ? 1 + rng() % 3 : 0;
            row.time_ms = rng() % 4 == 0 ? -1 : static_cast<int64_t>(rng() % 100);
            insert_record(db, "result", result_to_record(row));
        }
    }
    return db;
}

}  // namespace tsdb::testgen
