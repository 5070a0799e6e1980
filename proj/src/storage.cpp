// SPDX-License-Identifier: Apache-2.0
#include "tsdb/storage.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "tsdb/text.hpp"

namespace tsdb {

std::string render_value(const Value& value) {
    switch (value.index()) {
        case 0: return std::to_string(std::get<int64_t>(value));
        case 1: return std::get<std::string>(value);
        default: return render_span(std::get<TokenSpan>(value));
    }
}

Value parse_value(const std::string& field, AttrType type) {
    switch (type) {
        case AttrType::integer: {
            if (field.empty()) return int64_t{-1};  // missing integer
            auto n = parse_int(field);
            if (!n) throw StorageError("\"" + field + "\" is not an integer");
            return *n;
        }
        case AttrType::string:
            return field;
        case AttrType::position: {
            auto colon = field.find(':');
            if (colon == std::string::npos) {
                throw StorageError("\"" + field + "\" is not a start:end position");
            }
            auto start = parse_int(field.substr(0, colon));
            auto end = parse_int(field.substr(colon + 1));
            if (!start || !end) {
                throw StorageError("\"" + field + "\" is not a start:end position");
            }
            return TokenSpan{*start, *end};
        }
    }
    throw StorageError("unknown attribute type");
}

Database::Database(Schema schema, std::string language)
    : schema_(std::move(schema)), language_(std::move(language)) {
    relations_.resize(schema_.relations().size());
}

const std::vector<Record>& Database::records(std::string_view relation) const {
    auto idx = schema_.relation_index(relation);
    if (!idx) throw StorageError("unknown relation \"" + std::string(relation) + "\"");
    return relations_[*idx];
}

std::vector<Record>& Database::records_mutable(std::string_view relation) {
    auto idx = schema_.relation_index(relation);
    if (!idx) throw StorageError("unknown relation \"" + std::string(relation) + "\"");
    return relations_[*idx];
}

void Database::add_taxonomy_name(const std::string& name) {
    if (std::find(taxonomy_.begin(), taxonomy_.end(), name) == taxonomy_.end()) {
        taxonomy_.push_back(name);
    }
}

namespace {

Record parse_record_line(const std::string& line, const RelationDecl& decl,
                         const std::string& where, int line_no) {
    std::string diagnostic;
    auto fields = split_record_line(line, &diagnostic);
    if (!fields) {
        throw StorageError(where + " line " + std::to_string(line_no) + ": " + diagnostic);
    }
    if (fields->size() != decl.attributes.size()) {
        throw StorageError(where + " line " + std::to_string(line_no) + ": relation \"" +
                           decl.name + "\" needs " + std::to_string(decl.attributes.size()) +
                           " fields, got " + std::to_string(fields->size()));
    }
    Record record;
    record.reserve(fields->size());
    for (size_t i = 0; i < fields->size(); ++i) {
        try {
            record.push_back(parse_value((*fields)[i], decl.attributes[i].type));
        } catch (const StorageError& e) {
            throw StorageError(where + " line " + std::to_string(line_no) + ": attribute " +
                               decl.attributes[i].name + ": " + e.what());
        }
    }
    return record;
}

std::string render_record_line(const Record& record) {
    std::vector<std::string> fields;
    fields.reserve(record.size());
    for (const auto& value : record) fields.push_back(render_value(value));
    return join_record_line(fields);
}

std::string key_tuple(const Record& record, const std::vector<size_t>& key_indices) {
    std::string out;
    for (size_t idx : key_indices) {
        out += render_value(record[idx]);
        out += '\x1f';
    }
    return out;
}

// Rejects duplicate keys while reading one relation file.
class KeyGuard {
public:
    explicit KeyGuard(const RelationDecl& decl) : keys_(decl.key_indices()) {}

    bool admit(const Record& record) {
        if (keys_.empty()) return true;
        return seen_.insert(key_tuple(record, keys_)).second;
    }

private:
    std::vector<size_t> keys_;
    std::set<std::string> seen_;
};

}  // namespace

Database load_database(const std::filesystem::path& home, const std::string& language) {
    std::filesystem::path schema_path = home / "relations";
    std::ifstream schema_file(schema_path);
    if (!schema_file) {
        throw StorageError("missing schema file " + schema_path.string());
    }
    Schema schema;
    try {
        schema = parse_schema(schema_file);
    } catch (const SchemaError& e) {
        throw StorageError(schema_path.string() + ": " + e.what());
    }

    Database db(schema, language);
    std::filesystem::path data_dir = home / language;
    for (const auto& decl : schema.relations()) {
        std::filesystem::path path = data_dir / decl.name;
        std::ifstream file(path);
        if (!file) continue;  // missing file = empty relation
        KeyGuard guard(decl);
        auto& records = db.records_mutable(decl.name);
        std::string line;
        int line_no = 0;
        while (std::getline(file, line)) {
            ++line_no;
            if (line.empty()) continue;
            Record record = parse_record_line(line, decl, path.string(), line_no);
            if (!guard.admit(record)) {
                throw StorageError(path.string() + " line " + std::to_string(line_no) +
                                   ": duplicate key in relation \"" + decl.name + "\"");
            }
            records.push_back(std::move(record));
        }
    }

    std::ifstream taxonomy_file(data_dir / "taxonomy");
    if (taxonomy_file) {
        std::vector<std::string> names;
        std::string line;
        while (std::getline(taxonomy_file, line)) {
            std::string name = trim(line);
            if (!name.empty()) names.push_back(std::move(name));
        }
        db.set_taxonomy(std::move(names));
    }
    return db;
}

void store_database(const Database& db, const std::filesystem::path& home) {
    std::error_code ec;
    std::filesystem::create_directories(home / db.language(), ec);
    if (ec) throw StorageError("cannot create " + (home / db.language()).string());

    std::ofstream schema_file(home / "relations");
    if (!schema_file) throw StorageError("cannot write " + (home / "relations").string());
    schema_file << render_schema(db.schema());

    std::filesystem::path data_dir = home / db.language();
    for (const auto& decl : db.schema().relations()) {
        std::ofstream file(data_dir / decl.name);
        if (!file) throw StorageError("cannot write " + (data_dir / decl.name).string());
        for (const auto& record : db.records(decl.name)) {
            file << render_record_line(record) << '\n';
        }
    }

    std::filesystem::path taxonomy_path = data_dir / "taxonomy";
    if (db.taxonomy().empty()) {
        std::filesystem::remove(taxonomy_path, ec);
    } else {
        std::ofstream file(taxonomy_path);
        if (!file) throw StorageError("cannot write " + taxonomy_path.string());
        for (const auto& name : db.taxonomy()) file << name << '\n';
    }
}

namespace {

void check_record_shape(const Record& record, const RelationDecl& decl) {
    if (record.size() != decl.attributes.size()) {
        throw StorageError("relation \"" + decl.name + "\" needs " +
                           std::to_string(decl.attributes.size()) + " fields, got " +
                           std::to_string(record.size()));
    }
    for (size_t i = 0; i < record.size(); ++i) {
        if (record[i].index() != static_cast<size_t>(decl.attributes[i].type)) {
            throw StorageError("attribute " + decl.attributes[i].name + " expects " +
                               attr_type_name(decl.attributes[i].type) + ", got \"" +
                               render_value(record[i]) + "\"");
        }
    }
}

int64_t max_key_value(const std::vector<Record>& records, size_t key_index) {
    int64_t max_id = 0;
    for (const auto& record : records) {
        max_id = std::max(max_id, std::get<int64_t>(record[key_index]));
    }
    return max_id;
}

}  // namespace

int64_t insert_record(Database& db, const std::string& relation, Record record) {
    const RelationDecl* decl = db.schema().relation(relation);
    if (!decl) throw StorageError("unknown relation \"" + relation + "\"");
    check_record_shape(record, *decl);

    auto& records = db.records_mutable(relation);
    int64_t assigned = 0;
    if (auto key = decl->single_integer_key()) {
        int64_t supplied = std::get<int64_t>(record[*key]);
        if (supplied < 1) {
            assigned = max_key_value(records, *key) + 1;
            record[*key] = assigned;
        } else {
            for (const auto& existing : records) {
                if (std::get<int64_t>(existing[*key]) == supplied) {
                    throw StorageError("duplicate key " + std::to_string(supplied) +
                                       " in relation \"" + relation + "\"");
                }
            }
            assigned = supplied;
        }
    } else {
        auto keys = decl->key_indices();
        if (!keys.empty()) {
            std::string tuple = key_tuple(record, keys);
            for (const auto& existing : records) {
                if (key_tuple(existing, keys) == tuple) {
                    throw StorageError("duplicate key in relation \"" + relation + "\"");
                }
            }
        }
    }
    records.push_back(std::move(record));
    return assigned;
}

size_t delete_records(Database& db, const std::string& relation,
                      const std::function<bool(const Record&)>& predicate) {
    auto& records = db.records_mutable(relation);
    size_t before = records.size();
    records.erase(std::remove_if(records.begin(), records.end(), predicate), records.end());
    return before - records.size();
}

namespace {

struct ConsistencyContext {
    const Database& db;
    std::vector<Violation>& out;

    void add(const std::string& field, const std::string& rule, const std::string& detail) {
        out.push_back({field, rule, detail});
    }
};

void check_record_rules(ConsistencyContext& ctx) {
    std::map<int64_t, TestItem> items;
    for (const auto& record : ctx.db.records("item")) {
        TestItem item = record_to_item(record);
        for (auto violation : validate_item(item)) {
            violation.detail = "item " + std::to_string(item.id) + ": " + violation.detail;
            ctx.out.push_back(std::move(violation));
        }
        items.emplace(item.id, std::move(item));
    }
    for (const auto& record : ctx.db.records("analysis")) {
        AnalysisSpan span = record_to_span(record);
        auto parent = items.find(span.item_id);
        if (parent == items.end()) continue;  // reported as a dangling reference
        for (auto violation : validate_span(span, parent->second)) {
            violation.detail = "item " + std::to_string(span.item_id) + ": " + violation.detail;
            ctx.out.push_back(std::move(violation));
        }
    }
    for (const auto& record : ctx.db.records("result")) {
        ResultRow row = record_to_result(record);
        std::string where =
            "run " + std::to_string(row.run_id) + " item " + std::to_string(row.item_id);
        if (row.accepted != 0 && row.accepted != 1) {
            ctx.add("o-accepted", "accepted-code",
                    where + ": accepted must be 0 or 1, got " + std::to_string(row.accepted));
        }
        if (row.readings < 0) {
            ctx.add("o-readings", "readings-range",
                    where + ": readings must be >= 0, got " + std::to_string(row.readings));
        } else if (row.accepted == 0 && row.readings != 0) {
            ctx.add("o-readings", "accepted-readings",
                    where + ": rejected result must have 0 readings, got " +
                        std::to_string(row.readings));
        }
        if (row.time_ms < -1) {
            ctx.add("o-time", "time-range",
                    where + ": time must be >= 0 or -1 for unmeasured, got " +
                        std::to_string(row.time_ms));
        }
    }
}

void check_keys(ConsistencyContext& ctx) {
    for (const auto& decl : ctx.db.schema().relations()) {
        auto keys = decl.key_indices();
        if (keys.empty()) continue;
        std::set<std::string> seen;
        for (const auto& record : ctx.db.records(decl.name)) {
            if (!seen.insert(key_tuple(record, keys)).second) {
                std::string rendered;
                for (size_t idx : keys) {
                    if (!rendered.empty()) rendered += ", ";
                    rendered += decl.attributes[idx].name + "=" + render_value(record[idx]);
                }
                ctx.add(decl.attributes[keys[0]].name, "duplicate-key",
                        "relation " + decl.name + ": duplicate key (" + rendered + ")");
            }
        }
    }
}

void check_references(ConsistencyContext& ctx) {
    for (const auto& edge : ctx.db.schema().join_edges()) {
        auto owner = ctx.db.schema().owner_of_attribute(edge.attribute);
        if (!owner) continue;
        const std::string& parent = *owner;
        const std::string& child = edge.left == parent ? edge.right : edge.left;
        const RelationDecl* parent_decl = ctx.db.schema().relation(parent);
        const RelationDecl* child_decl = ctx.db.schema().relation(child);
        size_t parent_idx = *parent_decl->attribute_index(edge.attribute);
        size_t child_idx = *child_decl->attribute_index(edge.attribute);

        std::set<int64_t> parent_ids;
        for (const auto& record : ctx.db.records(parent)) {
            parent_ids.insert(std::get<int64_t>(record[parent_idx]));
        }
        for (const auto& record : ctx.db.records(child)) {
            int64_t value = std::get<int64_t>(record[child_idx]);
            if (!parent_ids.contains(value)) {
                ctx.add(edge.attribute, "dangling-reference",
                        "relation " + child + ": " + edge.attribute + "=" +
                            std::to_string(value) + " has no matching record in " + parent);
            }
        }
    }
}

void check_phenomena(ConsistencyContext& ctx) {
    std::vector<Phenomenon> phenomena;
    for (const auto& record : ctx.db.records("phenomenon")) {
        phenomena.push_back(record_to_phenomenon(record));
    }
    std::set<std::string> known_names;
    std::set<std::string> abstract_names(ctx.db.taxonomy().begin(), ctx.db.taxonomy().end());
    std::map<std::string, const Phenomenon*> by_name;
    for (const auto& p : phenomena) {
        if (!known_names.insert(p.name).second) {
            ctx.add("p-name", "duplicate-name", "phenomenon name \"" + p.name + "\" is not unique");
        }
        by_name.emplace(p.name, &p);
        if (p.id < 1) {
            ctx.add("p-id", "id-positive",
                    "phenomenon \"" + p.name + "\": id must be positive, got " +
                        std::to_string(p.id));
        }
    }

    auto resolvable = [&](const std::string& name) {
        return known_names.contains(name) || abstract_names.contains(name);
    };
    for (const auto& p : phenomena) {
        for (const auto& name : p.supertypes) {
            if (!resolvable(name)) {
                ctx.add("p-supertypes", "unresolved-name",
                        "phenomenon \"" + p.name + "\": supertype \"" + name +
                            "\" is neither a phenomenon nor a declared taxonomy name");
            }
        }
        for (const auto& name : p.presupposition) {
            if (!resolvable(name)) {
                ctx.add("p-presupposition", "unresolved-name",
                        "phenomenon \"" + p.name + "\": presupposition \"" + name +
                            "\" is neither a phenomenon nor a declared taxonomy name");
            }
        }
    }

    // Cycle detection over phenomenon records; abstract taxonomy names
    // have no outgoing edges and cannot participate in a cycle.
    auto find_cycles = [&](auto edges_of, const std::string& field, const std::string& rule) {
        std::map<std::string, int> state;  // 0 new, 1 in progress, 2 done
        std::function<bool(const Phenomenon&, std::vector<std::string>&)> visit =
            [&](const Phenomenon& p, std::vector<std::string>& trail) -> bool {
            int& s = state[p.name];
            if (s == 2) return false;
            if (s == 1) {
                trail.push_back(p.name);
                return true;
            }
            s = 1;
            for (const auto& name : edges_of(p)) {
                auto it = by_name.find(name);
                if (it != by_name.end() && visit(*it->second, trail)) {
                    trail.push_back(p.name);
                    state[p.name] = 2;
                    return true;
                }
            }
            s = 2;
            return false;
        };
        for (const auto& p : phenomena) {
            std::vector<std::string> trail;
            if (visit(p, trail)) {
                std::reverse(trail.begin(), trail.end());
                ctx.add(field, rule, "cycle through " + join_tokens(trail, " -> "));
            }
        }
    };
    find_cycles([](const Phenomenon& p) { return p.supertypes; }, "p-supertypes",
                "supertype-cycle");
    find_cycles([](const Phenomenon& p) { return p.presupposition; }, "p-presupposition",
                "presupposition-cycle");
}

void check_links(ConsistencyContext& ctx) {
    std::set<std::pair<int64_t, int64_t>> seen;
    for (const auto& record : ctx.db.records("item-phenomenon")) {
        int64_t item_id = std::get<int64_t>(record[1]);
        int64_t phenomenon_id = std::get<int64_t>(record[2]);
        if (!seen.insert({item_id, phenomenon_id}).second) {
            ctx.add("ip-id", "link-duplicate",
                    "item " + std::to_string(item_id) + " is linked to phenomenon " +
                        std::to_string(phenomenon_id) + " more than once");
        }
    }
}

void check_sets(ConsistencyContext& ctx) {
    std::map<int64_t, int64_t> item_wf;
    for (const auto& record : ctx.db.records("item")) {
        item_wf[std::get<int64_t>(record[0])] = std::get<int64_t>(record[7]);
    }
    std::map<int64_t, std::vector<int64_t>> sets;
    for (const auto& record : ctx.db.records("set")) {
        sets[std::get<int64_t>(record[0])].push_back(std::get<int64_t>(record[1]));
    }
    for (const auto& [set_id, members] : sets) {
        if (members.size() < 2) {
            ctx.add("s-id", "set-size",
                    "set " + std::to_string(set_id) + " has " + std::to_string(members.size()) +
                        " member(s), needs at least 2");
        }
        bool has_wellformed = false;
        for (int64_t member : members) {
            auto it = item_wf.find(member);
            if (it != item_wf.end() && it->second == 1) has_wellformed = true;
        }
        if (!has_wellformed) {
            ctx.add("s-id", "set-wellformed",
                    "set " + std::to_string(set_id) + " has no well-formed member");
        }
    }
}

}  // namespace

std::vector<Violation> check_consistency(const Database& db) {
    std::vector<Violation> out;
    ConsistencyContext ctx{db, out};
    check_record_rules(ctx);
    check_keys(ctx);
    check_references(ctx);
    check_phenomena(ctx);
    check_links(ctx);
    check_sets(ctx);
    return out;
}

void export_dump(const Database& db, std::ostream& out) {
    out << "#tsdb-dump\n";
    out << "#language " << db.language() << '\n';
    for (const auto& decl : db.schema().relations()) {
        const auto& records = db.records(decl.name);
        if (records.empty()) continue;
        out << '[' << decl.name << "]\n";
        for (const auto& record : records) out << render_record_line(record) << '\n';
    }
    if (!db.taxonomy().empty()) {
        out << "[taxonomy]\n";
        for (const auto& name : db.taxonomy()) out << name << '\n';
    }
}

void import_dump(Database& db, std::istream& in) {
    Database staged = db;
    const RelationDecl* decl = nullptr;
    bool taxonomy_section = false;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        if (line.front() == '[' && line.back() == ']') {
            std::string section = line.substr(1, line.size() - 2);
            if (section == "taxonomy") {
                taxonomy_section = true;
                decl = nullptr;
                continue;
            }
            taxonomy_section = false;
            decl = staged.schema().relation(section);
            if (!decl) {
                throw StorageError("dump line " + std::to_string(line_no) +
                                   ": unknown relation \"" + section + "\"");
            }
            continue;
        }
        if (taxonomy_section) {
            staged.add_taxonomy_name(trim(line));
            continue;
        }
        if (!decl) {
            throw StorageError("dump line " + std::to_string(line_no) +
                               ": record outside a [relation] section");
        }
        Record record = parse_record_line(line, *decl, "dump", line_no);
        try {
            insert_record(staged, decl->name, std::move(record));
        } catch (const StorageError& e) {
            throw StorageError("dump line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    db = std::move(staged);
}

Record pad_to_arity(const Database& db, const std::string& relation, Record record) {
    const RelationDecl* decl = db.schema().relation(relation);
    if (!decl) throw StorageError("unknown relation \"" + relation + "\"");
    while (record.size() < decl->attributes.size()) {
        switch (decl->attributes[record.size()].type) {
            case AttrType::integer: record.emplace_back(int64_t{-1}); break;
            case AttrType::string: record.emplace_back(std::string{}); break;
            case AttrType::position: record.emplace_back(TokenSpan{0, 0}); break;
        }
    }
    return record;
}

Record item_to_record(const TestItem& item) {
    return {item.id,     item.author,         item.date,     item.register_,
            item.format, item.origin,         item.difficulty, item.wellformedness,
            item.category, item.input,        item.length,   item.comment};
}

TestItem record_to_item(const Record& r) {
    TestItem item;
    item.id = std::get<int64_t>(r[0]);
    item.author = std::get<std::string>(r[1]);
    item.date = std::get<std::string>(r[2]);
    item.register_ = std::get<std::string>(r[3]);
    item.format = std::get<std::string>(r[4]);
    item.origin = std::get<std::string>(r[5]);
    item.difficulty = std::get<int64_t>(r[6]);
    item.wellformedness = std::get<int64_t>(r[7]);
    item.category = std::get<std::string>(r[8]);
    item.input = std::get<std::string>(r[9]);
    item.length = std::get<int64_t>(r[10]);
    item.comment = std::get<std::string>(r[11]);
    return item;
}

Record span_to_record(const AnalysisSpan& span) {
    return {span.item_id, span.position, span.instance, span.category, span.function, span.domain};
}

AnalysisSpan record_to_span(const Record& r) {
    AnalysisSpan span;
    span.item_id = std::get<int64_t>(r[0]);
    span.position = std::get<TokenSpan>(r[1]);
    span.instance = std::get<std::string>(r[2]);
    span.category = std::get<std::string>(r[3]);
    span.function = std::get<std::string>(r[4]);
    span.domain = std::get<TokenSpan>(r[5]);
    return span;
}

Record phenomenon_to_record(const Phenomenon& p) {
    return {p.id,
            p.name,
            join_name_list(p.supertypes),
            join_name_list(p.presupposition),
            p.restrictions,
            p.interaction,
            p.purpose,
            p.author,
            p.date,
            p.comment};
}

Phenomenon record_to_phenomenon(const Record& r) {
    Phenomenon p;
    p.id = std::get<int64_t>(r[0]);
    p.name = std::get<std::string>(r[1]);
    p.supertypes = split_name_list(std::get<std::string>(r[2]));
    p.presupposition = split_name_list(std::get<std::string>(r[3]));
    p.restrictions = std::get<std::string>(r[4]);
    p.interaction = std::get<std::string>(r[5]);
    p.purpose = std::get<std::string>(r[6]);
    p.author = std::get<std::string>(r[7]);
    p.date = std::get<std::string>(r[8]);
    p.comment = std::get<std::string>(r[9]);
    return p;
}

Record run_to_record(const Run& run) {
    return {run.id, run.application, run.date, run.environment, run.comment};
}

Run record_to_run(const Record& r) {
    Run run;
    run.id = std::get<int64_t>(r[0]);
    run.application = std::get<std::string>(r[1]);
    run.date = std::get<std::string>(r[2]);
    run.environment = std::get<std::string>(r[3]);
    run.comment = std::get<std::string>(r[4]);
    return run;
}

Record result_to_record(const ResultRow& row) {
    return {row.run_id, row.item_id, row.accepted, row.readings, row.time_ms, row.output,
            row.flags};
}

ResultRow record_to_result(const Record& r) {
    ResultRow row;
    row.run_id = std::get<int64_t>(r[0]);
    row.item_id = std::get<int64_t>(r[1]);
    row.accepted = std::get<int64_t>(r[2]);
    row.readings = std::get<int64_t>(r[3]);
    row.time_ms = std::get<int64_t>(r[4]);
    row.output = std::get<std::string>(r[5]);
    row.flags = std::get<std::string>(r[6]);
    return row;
}

std::vector<std::string> split_name_list(const std::string& text) {
    std::vector<std::string> names;
    for (const auto& part : split_on(text, ',')) {
        std::string name = trim(part);
        if (!name.empty()) names.push_back(std::move(name));
    }
    return names;
}

std::string join_name_list(const std::vector<std::string>& names) {
    return join_tokens(names, ", ");
}

std::optional<TestItem> find_item(const Database& db, int64_t item_id) {
    for (const auto& record : db.records("item")) {
        if (std::get<int64_t>(record[0]) == item_id) return record_to_item(record);
    }
    return std::nullopt;
}

std::vector<AnalysisSpan> spans_of_item(const Database& db, int64_t item_id) {
    std::vector<AnalysisSpan> out;
    for (const auto& record : db.records("analysis")) {
        if (std::get<int64_t>(record[0]) == item_id) out.push_back(record_to_span(record));
    }
    return out;
}

}  // namespace tsdb
