// SPDX-License-Identifier: Apache-2.0
#include "tsdb/shell.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include "tsdb/lineedit.hpp"
#include "tsdb/query.hpp"
#include "tsdb/text.hpp"

namespace tsdb {

namespace {

const std::vector<std::string> kMetaCommands = {
    "\\quit",   "\\relations", "\\describe", "\\language", "\\import",
    "\\export", "\\check",     "\\insert",   "\\history"};

std::vector<std::string> completion_vocabulary(const Database& db) {
    std::vector<std::string> words = kMetaCommands;
    words.push_back("select");
    words.push_back("where");
    for (const auto& decl : db.schema().relations()) {
        words.push_back(decl.name);
        for (const auto& attr : decl.attributes) words.push_back(attr.name);
    }
    std::sort(words.begin(), words.end());
    words.erase(std::unique(words.begin(), words.end()), words.end());
    return words;
}

size_t record_count(const Database& db) {
    size_t count = 0;
    for (const auto& decl : db.schema().relations()) count += db.records(decl.name).size();
    return count;
}

void print_table(const ResultTable& table, const std::string& format, std::ostream& out) {
    if (format == "delimited") {
        for (const auto& line : table.delimited_lines()) out << line << '\n';
    } else {
        out << table.aligned_text();
    }
}

// Field-by-field prompted insert with per-field validation; the previous
// record of the relation supplies the defaults.
class GuidedInsert {
public:
    GuidedInsert(Database& db, const std::string& relation, LineEditor& editor,
                 std::ostream& out)
        : db_(db), relation_(relation), editor_(editor), out_(out) {}

    // Returns the assigned id, or nullopt when aborted.
    std::optional<int64_t> run() {
        const RelationDecl* decl = db_.schema().relation(relation_);
        if (!decl) {
            out_ << "error: unknown relation \"" << relation_ << "\"\n";
            return std::nullopt;
        }
        const auto& records = db_.records(relation_);
        const Record* previous = records.empty() ? nullptr : &records.back();
        auto auto_key = decl->single_integer_key();

        Record record;
        for (size_t i = 0; i < decl->attributes.size(); ++i) {
            const AttributeDecl& attr = decl->attributes[i];
            std::string fallback;
            if (auto_key && *auto_key == i) {
                fallback = "auto";
            } else if (previous) {
                fallback = render_value((*previous)[i]);
            }
            auto value = prompt_field(attr, fallback, auto_key && *auto_key == i);
            if (!value) {
                out_ << "aborted; nothing inserted\n";
                return std::nullopt;
            }
            record.push_back(std::move(*value));
        }

        if (relation_ == "item") {
            auto violations = validate_item(record_to_item(record));
            for (const auto& violation : violations) {
                out_ << "note: " << render_violation(violation) << '\n';
            }
        }
        auto confirmation = ask("insert? [y/N] ");
        if (!confirmation || (*confirmation != "y" && *confirmation != "yes")) {
            out_ << "aborted; nothing inserted\n";
            return std::nullopt;
        }
        try {
            return insert_record(db_, relation_, std::move(record));
        } catch (const StorageError& e) {
            out_ << "error: " << e.what() << '\n';
            return std::nullopt;
        }
    }

private:
    std::optional<std::string> ask(const std::string& prompt) {
        if (!editor_.interactive()) out_ << prompt;
        out_.flush();
        return editor_.read_line(prompt);
    }

    std::optional<Value> prompt_field(const AttributeDecl& attr, const std::string& fallback,
                                      bool is_auto_key) {
        std::string label = "  " + attr.name + " :" + attr_type_name(attr.type);
        if (!fallback.empty()) label += " [" + fallback + "]";
        label += ": ";
        while (true) {
            auto line = ask(label);
            if (!line) return std::nullopt;
            std::string text = trim(*line);
            if (text.empty()) text = fallback;
            if (is_auto_key && (text == "auto" || text.empty())) return Value{int64_t{0}};
            try {
                return parse_value(text, attr.type);
            } catch (const StorageError& e) {
                out_ << "  " << e.what() << "; try again\n";
            }
        }
    }

    Database& db_;
    std::string relation_;
    LineEditor& editor_;
    std::ostream& out_;
};

class Shell {
public:
    Shell(const ShellConfig& config, std::istream& in, std::ostream& out, std::ostream& err)
        : config_(config), in_(in), out_(out), err_(err) {}

    int run() {
        try {
            db_ = load_database(config_.home, config_.language);
        } catch (const Error& e) {
            err_ << "error: " << e.what() << '\n';
            return 2;
        }
        vocabulary_ = completion_vocabulary(db_);
        LineEditor editor(in_, out_, [this](const std::string& prefix) {
            std::vector<std::string> matches;
            for (const auto& word : vocabulary_) {
                if (word.starts_with(prefix)) matches.push_back(word);
            }
            return matches;
        });
        editor.set_history_file(config_.home / ".tsdb_history");
        editor_ = &editor;

        while (true) {
            auto line = editor.read_line("tsdb> ");
            if (!line) break;  // end of input behaves like \quit
            std::string text = trim(*line);
            if (text.empty()) continue;
            editor.add_history(*line);
            if (text == "\\quit" || text == "\\q") break;
            dispatch(text);
        }
        editor.save_history();
        return 0;
    }

private:
    void dispatch(const std::string& text) {
        if (text.front() == '\\') {
            std::istringstream words(text);
            std::string command, argument;
            words >> command;
            std::getline(words, argument);
            argument = trim(argument);
            meta(command, argument);
            return;
        }
        try {
            ResultTable table = run_query(text, db_);
            print_table(table, config_.format, out_);
        } catch (const Error& e) {
            out_ << "error: " << e.what() << '\n';
        }
    }

    void meta(const std::string& command, const std::string& argument) {
        if (command == "\\relations") {
            for (const auto& decl : db_.schema().relations()) out_ << decl.name << '\n';
        } else if (command == "\\describe") {
            const RelationDecl* decl = db_.schema().relation(argument);
            if (!decl) {
                out_ << "error: unknown relation \"" << argument << "\"\n";
                return;
            }
            for (const auto& attr : decl->attributes) {
                out_ << "  " << attr.name << " :" << attr_type_name(attr.type)
                     << (attr.key ? " :key" : "") << '\n';
            }
        } else if (command == "\\language") {
            if (argument.empty()) {
                out_ << "language " << db_.language() << '\n';
                return;
            }
            try {
                Database switched = load_database(config_.home, argument);
                db_ = std::move(switched);
                config_.language = argument;
                out_ << "language " << argument << " (unexported changes discarded)\n";
            } catch (const Error& e) {
                out_ << "error: " << e.what() << '\n';
            }
        } else if (command == "\\import") {
            std::ifstream file(argument);
            if (!file) {
                out_ << "error: cannot read \"" << argument << "\"\n";
                return;
            }
            try {
                size_t before = record_count(db_);
                import_dump(db_, file);
                store_database(db_, config_.home);
                out_ << "imported " << (record_count(db_) - before) << " records\n";
            } catch (const Error& e) {
                out_ << "error: " << e.what() << '\n';
            }
        } else if (command == "\\export") {
            std::ofstream file(argument);
            if (!file) {
                out_ << "error: cannot write \"" << argument << "\"\n";
                return;
            }
            export_dump(db_, file);
            out_ << "exported to " << argument << '\n';
        } else if (command == "\\check") {
            auto violations = check_consistency(db_);
            if (violations.empty()) {
                out_ << "consistent\n";
            } else {
                for (const auto& violation : violations) {
                    out_ << render_violation(violation) << '\n';
                }
                out_ << '(' << violations.size() << " violations)\n";
            }
        } else if (command == "\\insert") {
            GuidedInsert dialogue(db_, argument, *editor_, out_);
            auto inserted = dialogue.run();
            if (inserted) {
                try {
                    store_database(db_, config_.home);
                } catch (const Error& e) {
                    out_ << "error: " << e.what() << '\n';
                    return;
                }
                out_ << "inserted";
                if (*inserted != 0) out_ << " id " << *inserted;
                out_ << '\n';
            }
        } else if (command == "\\history") {
            const auto& entries = editor_->history();
            for (size_t i = 0; i < entries.size(); ++i) {
                out_ << i + 1 << "  " << entries[i] << '\n';
            }
        } else {
            out_ << "error: unknown command " << command << "; commands are";
            for (const auto& name : kMetaCommands) out_ << ' ' << name;
            out_ << '\n';
        }
    }

    ShellConfig config_;
    std::istream& in_;
    std::ostream& out_;
    std::ostream& err_;
    Database db_;
    std::vector<std::string> vocabulary_;
    LineEditor* editor_ = nullptr;
};

}  // namespace

int repl(const ShellConfig& config, std::istream& in, std::ostream& out, std::ostream& err) {
    Shell shell(config, in, out, err);
    return shell.run();
}

int run_once(const ShellConfig& config, const std::string& query_text, std::ostream& out,
             std::ostream& err) {
    Database db;
    try {
        db = load_database(config.home, config.language);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    try {
        ResultTable table = run_query(query_text, db);
        print_table(table, config.format, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace tsdb
