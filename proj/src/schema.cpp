// SPDX-License-Identifier: Apache-2.0
#include "tsdb/schema.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <sstream>

namespace tsdb {

std::string attr_type_name(AttrType type) {
    switch (type) {
        case AttrType::integer: return "integer";
        case AttrType::string: return "string";
        case AttrType::position: return "position";
    }
    return "?";
}

std::optional<size_t> RelationDecl::attribute_index(std::string_view attr) const {
    for (size_t i = 0; i < attributes.size(); ++i) {
        if (attributes[i].name == attr) return i;
    }
    return std::nullopt;
}

std::vector<size_t> RelationDecl::key_indices() const {
    std::vector<size_t> out;
    for (size_t i = 0; i < attributes.size(); ++i) {
        if (attributes[i].key) out.push_back(i);
    }
    return out;
}

std::optional<size_t> RelationDecl::single_integer_key() const {
    auto keys = key_indices();
    if (keys.size() == 1 && attributes[keys[0]].type == AttrType::integer) return keys[0];
    return std::nullopt;
}

Schema::Schema(std::vector<RelationDecl> relations, std::vector<JoinEdge> join_edges)
    : relations_(std::move(relations)), join_edges_(std::move(join_edges)) {
    validate();
}

const RelationDecl* Schema::relation(std::string_view name) const {
    for (const auto& rel : relations_) {
        if (rel.name == name) return &rel;
    }
    return nullptr;
}

std::optional<size_t> Schema::relation_index(std::string_view name) const {
    for (size_t i = 0; i < relations_.size(); ++i) {
        if (relations_[i].name == name) return i;
    }
    return std::nullopt;
}

bool Schema::has_attribute(std::string_view attr) const {
    return attribute_type(attr).has_value();
}

std::optional<AttrType> Schema::attribute_type(std::string_view attr) const {
    for (const auto& rel : relations_) {
        if (auto idx = rel.attribute_index(attr)) return rel.attributes[*idx].type;
    }
    return std::nullopt;
}

std::optional<std::string> Schema::owner_of_attribute(std::string_view attr) const {
    std::vector<const RelationDecl*> declaring;
    for (const auto& rel : relations_) {
        if (rel.attribute_index(attr)) declaring.push_back(&rel);
    }
    if (declaring.empty()) return std::nullopt;
    if (declaring.size() == 1) return declaring[0]->name;
    // Shared by several relations: the owner is the one whose sole key it is.
    for (const auto* rel : declaring) {
        auto keys = rel->key_indices();
        if (keys.size() == 1 && rel->attributes[keys[0]].name == attr) return rel->name;
    }
    return std::nullopt;
}

std::vector<const JoinEdge*> Schema::edges_of(std::string_view relation) const {
    std::vector<const JoinEdge*> out;
    for (const auto& edge : join_edges_) {
        if (edge.left == relation || edge.right == relation) out.push_back(&edge);
    }
    return out;
}

std::vector<std::string> Schema::path_between(std::string_view from, std::string_view to) const {
    std::map<std::string, std::string> parent;
    std::deque<std::string> queue;
    queue.emplace_back(from);
    parent[std::string(from)] = "";
    while (!queue.empty()) {
        std::string current = queue.front();
        queue.pop_front();
        if (current == to) {
            std::vector<std::string> path;
            for (std::string node = current; !node.empty(); node = parent[node]) {
                path.push_back(node);
            }
            std::reverse(path.begin(), path.end());
            return path;
        }
        for (const auto* edge : edges_of(current)) {
            const std::string& next = edge->left == current ? edge->right : edge->left;
            if (!parent.contains(next)) {
                parent[next] = current;
                queue.push_back(next);
            }
        }
    }
    return {};
}

void Schema::validate() const {
    std::set<std::string> names;
    for (const auto& rel : relations_) {
        if (rel.name.empty()) throw SchemaError("relation with empty name");
        if (!names.insert(rel.name).second) {
            throw SchemaError("duplicate relation \"" + rel.name + "\"");
        }
        std::set<std::string> attrs;
        for (const auto& attr : rel.attributes) {
            if (attr.name.empty()) {
                throw SchemaError("relation \"" + rel.name + "\" has an attribute with empty name");
            }
            if (!attrs.insert(attr.name).second) {
                throw SchemaError("relation \"" + rel.name + "\" declares attribute \"" +
                                  attr.name + "\" twice");
            }
        }
    }
    for (const auto& edge : join_edges_) {
        const RelationDecl* left = relation(edge.left);
        const RelationDecl* right = relation(edge.right);
        if (!left || !right) {
            throw SchemaError("join edge references unknown relation \"" +
                              (left ? edge.right : edge.left) + "\"");
        }
        if (!left->attribute_index(edge.attribute) || !right->attribute_index(edge.attribute)) {
            throw SchemaError("join attribute \"" + edge.attribute +
                              "\" must appear in both \"" + edge.left + "\" and \"" + edge.right +
                              "\"");
        }
    }
    // The join graph must be a tree over all relations: connected, acyclic.
    if (relations_.empty()) return;
    if (join_edges_.size() + 1 != relations_.size()) {
        throw SchemaError("join graph must be a tree: " + std::to_string(relations_.size()) +
                          " relations need " + std::to_string(relations_.size() - 1) +
                          " join edges, got " + std::to_string(join_edges_.size()));
    }
    std::set<std::string> seen;
    std::deque<std::string> queue{relations_.front().name};
    seen.insert(relations_.front().name);
    while (!queue.empty()) {
        std::string current = queue.front();
        queue.pop_front();
        for (const auto* edge : edges_of(current)) {
            const std::string& next = edge->left == current ? edge->right : edge->left;
            if (seen.insert(next).second) queue.push_back(next);
        }
    }
    if (seen.size() != relations_.size()) {
        throw SchemaError("join graph must connect all relations");
    }
    // Every shared attribute must have a resolvable owner.
    for (const auto& rel : relations_) {
        for (const auto& attr : rel.attributes) {
            if (!owner_of_attribute(attr.name)) {
                throw SchemaError("attribute \"" + attr.name +
                                  "\" is shared but no relation has it as its sole key");
            }
        }
    }
}

namespace {

AttrType parse_attr_type(const std::string& text, int line_no) {
    if (text == "integer") return AttrType::integer;
    if (text == "string") return AttrType::string;
    if (text == "position") return AttrType::position;
    throw SchemaError("relations file line " + std::to_string(line_no) + ": unknown type \"" +
                      text + "\"");
}

}  // namespace

Schema parse_schema(std::istream& in) {
    std::vector<RelationDecl> relations;
    std::vector<JoinEdge> join_edges;
    RelationDecl* current = nullptr;

    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;

        bool indented = line.front() == ' ' || line.front() == '\t';
        std::istringstream words(stripped);
        std::string first;
        words >> first;

        if (!indented && first == "join") {
            JoinEdge edge;
            if (!(words >> edge.left >> edge.right >> edge.attribute)) {
                throw SchemaError("relations file line " + std::to_string(line_no) +
                                  ": join needs two relations and an attribute");
            }
            std::string extra;
            if (words >> extra) {
                throw SchemaError("relations file line " + std::to_string(line_no) +
                                  ": trailing text after join declaration");
            }
            join_edges.push_back(std::move(edge));
            current = nullptr;
            continue;
        }

        if (!indented) {
            std::string extra;
            if (words >> extra) {
                throw SchemaError("relations file line " + std::to_string(line_no) +
                                  ": relation name must stand alone");
            }
            relations.push_back(RelationDecl{first, {}});
            current = &relations.back();
            continue;
        }

        if (!current) {
            throw SchemaError("relations file line " + std::to_string(line_no) +
                              ": attribute outside a relation stanza");
        }
        AttributeDecl attr;
        attr.name = first;
        std::string token;
        bool typed = false;
        while (words >> token) {
            if (token == ":key") {
                attr.key = true;
            } else if (!token.empty() && token.front() == ':') {
                attr.type = parse_attr_type(token.substr(1), line_no);
                typed = true;
            } else {
                throw SchemaError("relations file line " + std::to_string(line_no) +
                                  ": unexpected token \"" + token + "\"");
            }
        }
        if (!typed) {
            throw SchemaError("relations file line " + std::to_string(line_no) +
                              ": attribute \"" + attr.name + "\" needs a :type");
        }
        current->attributes.push_back(std::move(attr));
    }
    return Schema(std::move(relations), std::move(join_edges));
}

Schema parse_schema_text(const std::string& text) {
    std::istringstream in(text);
    return parse_schema(in);
}

std::string render_schema(const Schema& schema) {
    std::string out;
    for (const auto& rel : schema.relations()) {
        out += rel.name;
        out += '\n';
        for (const auto& attr : rel.attributes) {
            out += "  " + attr.name + " :" + attr_type_name(attr.type);
            if (attr.key) out += " :key";
            out += '\n';
        }
        out += '\n';
    }
    for (const auto& edge : schema.join_edges()) {
        out += "join " + edge.left + " " + edge.right + " " + edge.attribute + "\n";
    }
    return out;
}

Schema builtin_schema() {
    const auto I = AttrType::integer;
    const auto S = AttrType::string;
    const auto P = AttrType::position;
    std::vector<RelationDecl> relations = {
        {"item",
         {{"i-id", I, true},
          {"i-author", S, false},
          {"i-date", S, false},
          {"i-register", S, false},
          {"i-format", S, false},
          {"i-origin", S, false},
          {"i-difficulty", I, false},
          {"i-wf", I, false},
          {"i-category", S, false},
          {"i-input", S, false},
          {"i-length", I, false},
          {"i-comment", S, false}}},
        {"analysis",
         {{"i-id", I, false},
          {"a-position", P, false},
          {"a-instance", S, false},
          {"a-category", S, false},
          {"a-function", S, false},
          {"a-domain", P, false}}},
        {"phenomenon",
         {{"p-id", I, true},
          {"p-name", S, false},
          {"p-supertypes", S, false},
          {"p-presupposition", S, false},
          {"p-restrictions", S, false},
          {"p-interaction", S, false},
          {"p-purpose", S, false},
          {"p-author", S, false},
          {"p-date", S, false},
          {"p-comment", S, false}}},
        {"item-phenomenon",
         {{"ip-id", I, true}, {"i-id", I, false}, {"p-id", I, false}}},
        {"parameter",
         {{"ip-id", I, false}, {"par-name", S, false}, {"par-value", S, false}}},
        {"set", {{"s-id", I, true}, {"i-id", I, true}}},
        {"run",
         {{"r-id", I, true},
          {"r-application", S, false},
          {"r-date", S, false},
          {"r-environment", S, false},
          {"r-comment", S, false}}},
        {"result",
         {{"r-id", I, true},
          {"i-id", I, true},
          {"o-accepted", I, false},
          {"o-readings", I, false},
          {"o-time", I, false},
          {"o-output", S, false},
          {"o-flags", S, false}}},
    };
    std::vector<JoinEdge> edges = {
        {"item", "analysis", "i-id"},
        {"item", "item-phenomenon", "i-id"},
        {"item-phenomenon", "phenomenon", "p-id"},
        {"item-phenomenon", "parameter", "ip-id"},
        {"item", "set", "i-id"},
        {"item", "result", "i-id"},
        {"run", "result", "r-id"},
    };
    return Schema(std::move(relations), std::move(edges));
}

}  // namespace tsdb
