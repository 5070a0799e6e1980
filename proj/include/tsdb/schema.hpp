// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tsdb/text.hpp"

namespace tsdb {

class SchemaError : public Error {
public:
    using Error::Error;
};

enum class AttrType { integer, string, position };

std::string attr_type_name(AttrType type);

struct AttributeDecl {
    std::string name;
    AttrType type = AttrType::string;
    bool key = false;

    friend bool operator==(const AttributeDecl&, const AttributeDecl&) = default;
};

struct RelationDecl {
    std::string name;
    std::vector<AttributeDecl> attributes;

    std::optional<size_t> attribute_index(std::string_view attr) const;
    std::vector<size_t> key_indices() const;
    // Index of the single auto-assignable integer key, if the relation
    // has exactly one key attribute and it is an integer.
    std::optional<size_t> single_integer_key() const;

    friend bool operator==(const RelationDecl&, const RelationDecl&) = default;
};

/// An undirected join edge: the shared key attribute appears in both
/// endpoint relations (foreign keys reuse the referenced attribute name).
struct JoinEdge {
    std::string left;
    std::string right;
    std::string attribute;

    friend bool operator==(const JoinEdge&, const JoinEdge&) = default;
};

/// The fixed relational layout: a tree of relations joined on shared key
/// attributes. Read from the declarative "relations" file at startup.
class Schema {
public:
    Schema() = default;
    Schema(std::vector<RelationDecl> relations, std::vector<JoinEdge> join_edges);

    const std::vector<RelationDecl>& relations() const { return relations_; }
    const std::vector<JoinEdge>& join_edges() const { return join_edges_; }

    const RelationDecl* relation(std::string_view name) const;
    std::optional<size_t> relation_index(std::string_view name) const;

    bool has_attribute(std::string_view attr) const;
    std::optional<AttrType> attribute_type(std::string_view attr) const;

    /// The relation an attribute belongs to. Foreign-key copies resolve
    /// to the relation whose sole key the attribute is.
    std::optional<std::string> owner_of_attribute(std::string_view attr) const;

    /// Unique tree path between two relations, endpoints included.
    std::vector<std::string> path_between(std::string_view from, std::string_view to) const;

    /// Edges incident to a relation, in declaration order.
    std::vector<const JoinEdge*> edges_of(std::string_view relation) const;

    friend bool operator==(const Schema&, const Schema&) = default;

private:
    void validate() const;

    std::vector<RelationDecl> relations_;
    std::vector<JoinEdge> join_edges_;
};

/// Parses the "relations" schema file. Grammar (documented in README):
/// a relation name alone on an unindented line opens a stanza; each
/// indented line declares one attribute as "<name> :<type> [:key]";
/// unindented "join <rel> <rel> <attr>" lines declare join edges;
/// blank lines and lines starting with "#" are ignored.
Schema parse_schema(std::istream& in);
Schema parse_schema_text(const std::string& text);

std::string render_schema(const Schema& schema);

/// The stock eight-relation layout shipped with the toolkit.
Schema builtin_schema();

}  // namespace tsdb
