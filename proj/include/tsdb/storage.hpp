// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tsdb/model.hpp"
#include "tsdb/schema.hpp"

namespace tsdb {

class StorageError : public Error {
public:
    using Error::Error;
};

/// A typed field value. The variant index mirrors AttrType.
using Value = std::variant<int64_t, std::string, TokenSpan>;

std::string render_value(const Value& value);
Value parse_value(const std::string& field, AttrType type);  // throws StorageError

using Record = std::vector<Value>;

/// In-memory image of one per-language test suite database: the schema,
/// one ordered record list per relation, and the declared abstract
/// taxonomy names that phenomenon supertypes may reference.
class Database {
public:
    Database() : Database(builtin_schema(), "en") {}
    Database(Schema schema, std::string language);

    const Schema& schema() const { return schema_; }
    const std::string& language() const { return language_; }

    const std::vector<Record>& records(std::string_view relation) const;
    std::vector<Record>& records_mutable(std::string_view relation);

    const std::vector<std::string>& taxonomy() const { return taxonomy_; }
    void set_taxonomy(std::vector<std::string> names) { taxonomy_ = std::move(names); }
    void add_taxonomy_name(const std::string& name);

    friend bool operator==(const Database&, const Database&) = default;

private:
    Schema schema_;
    std::string language_;
    std::vector<std::vector<Record>> relations_;  // parallel to schema_.relations()
    std::vector<std::string> taxonomy_;
};

/// Loads a database from a home directory. The schema lives in
/// home/relations; data files live in home/<language>/<relation>, one
/// record per line in the "@"-delimited format; a missing data file is
/// an empty relation. Abstract taxonomy names come from
/// home/<language>/taxonomy, one per line.
Database load_database(const std::filesystem::path& home, const std::string& language);

/// Writes the database back. Records round-trip byte-identically.
void store_database(const Database& db, const std::filesystem::path& home);

/// Appends a record. A single-integer-key relation with the key value < 1
/// gets an assigned id of 1 + current maximum (1 for an empty relation);
/// the assigned or supplied id is returned (0 for keyless relations).
int64_t insert_record(Database& db, const std::string& relation, Record record);

size_t delete_records(Database& db, const std::string& relation,
                      const std::function<bool(const Record&)>& predicate);

/// Whole-database consistency check: per-record model invariants plus
/// referential integrity, key uniqueness, taxonomy resolution and
/// acyclicity, and test-set membership rules.
std::vector<Violation> check_consistency(const Database& db);

// Single-file dump used by import/export; stanzas of record lines per
// relation. Import merges and is atomic: any error leaves db unchanged.
void export_dump(const Database& db, std::ostream& out);
void import_dump(Database& db, std::istream& in);

// Conversions between typed model structs and raw records. The built-in
// attributes of each relation keep their canonical order; user-added
// attributes are appended and default to -1 / "" / 0:0 on insert.
Record pad_to_arity(const Database& db, const std::string& relation, Record record);
Record item_to_record(const TestItem& item);
TestItem record_to_item(const Record& record);
Record span_to_record(const AnalysisSpan& span);
AnalysisSpan record_to_span(const Record& record);
Record phenomenon_to_record(const Phenomenon& phenomenon);
Phenomenon record_to_phenomenon(const Record& record);
Record run_to_record(const Run& run);
Run record_to_run(const Record& record);
Record result_to_record(const ResultRow& result);
ResultRow record_to_result(const Record& record);

/// Splits a "C_Agreement, NP_Agreement" style name list.
std::vector<std::string> split_name_list(const std::string& text);
std::string join_name_list(const std::vector<std::string>& names);

std::optional<TestItem> find_item(const Database& db, int64_t item_id);
std::vector<AnalysisSpan> spans_of_item(const Database& db, int64_t item_id);

}  // namespace tsdb
