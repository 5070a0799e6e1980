// SPDX-License-Identifier: Apache-2.0
//
// tsdb: command-line front end for the test suite database toolkit.

#include <chrono>
#include <csignal>
#include <ctime>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "tsdb/genvar.hpp"
#include "tsdb/grammar.hpp"
#include "tsdb/harness.hpp"
#include "tsdb/query.hpp"
#include "tsdb/server.hpp"
#include "tsdb/shell.hpp"
#include "tsdb/storage.hpp"

namespace {

volatile std::sig_atomic_t g_shutdown = 0;

void on_signal(int) { g_shutdown = 1; }

struct CommonOptions {
    std::string home;
    std::string language = "en";
};

void add_common(CLI::App* app, CommonOptions& options) {
    app->add_option("--home", options.home, "database home directory")
        ->envname("TSDB_HOME")
        ->required();
    app->add_option("--language", options.language, "language code (en, fr, de)");
}

tsdb::Database load(const CommonOptions& options) {
    return tsdb::load_database(options.home, options.language);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tsdb: annotated test suite database, query engine, and evaluation harness"};
    app.require_subcommand(1);

    CommonOptions common;

    auto* shell_cmd = app.add_subcommand("shell", "interactive query shell");
    CommonOptions shell_options;
    std::string shell_format = "table";
    add_common(shell_cmd, shell_options);
    shell_cmd->add_option("--format", shell_format, "table or delimited")
        ->check(CLI::IsMember({"table", "delimited"}));

    auto* query_cmd = app.add_subcommand("query", "evaluate one query");
    CommonOptions query_options;
    std::string query_text, query_format = "table";
    add_common(query_cmd, query_options);
    query_cmd->add_option("-e,--query", query_text, "query text")->required();
    query_cmd->add_option("--format", query_format, "table or delimited")
        ->check(CLI::IsMember({"table", "delimited"}));

    auto* check_cmd = app.add_subcommand("check", "run the consistency checker");
    CommonOptions check_options;
    add_common(check_cmd, check_options);

    auto* import_cmd = app.add_subcommand("import", "merge a dump file into the database");
    CommonOptions import_options;
    std::string import_file;
    add_common(import_cmd, import_options);
    import_cmd->add_option("file", import_file, "dump file")->required();

    auto* export_cmd = app.add_subcommand("export", "write the database to a dump file");
    CommonOptions export_options;
    std::string export_file;
    add_common(export_cmd, export_options);
    export_cmd->add_option("file", export_file, "dump file")->required();

    auto* serve_cmd = app.add_subcommand("serve", "read-only network query server");
    CommonOptions serve_options;
    uint16_t port = tsdb::kDefaultPort;
    add_common(serve_cmd, serve_options);
    serve_cmd->add_option("--port", port, "TCP port")->envname("TSDB_PORT");

    auto* generate_cmd =
        app.add_subcommand("generate", "derive ill-formed items and group them as a test set");
    CommonOptions generate_options;
    int64_t base_id = 0;
    std::string directives_file;
    add_common(generate_cmd, generate_options);
    generate_cmd->add_option("--base", base_id, "well-formed source item id")->required();
    generate_cmd->add_option("--directives", directives_file, "directive file")->required();

    auto* expand_cmd = app.add_subcommand("expand", "expand a production grammar into items");
    std::string grammar_file, expand_out;
    size_t expand_limit = 100;
    expand_cmd->add_option("--grammar", grammar_file, "grammar file")->required();
    expand_cmd->add_option("--limit", expand_limit, "maximum number of items");
    expand_cmd->add_option("--out", expand_out, "output dump file (stdout when omitted)");

    auto* run_cmd = app.add_subcommand("run", "run selected items through an application");
    CommonOptions run_options;
    std::string select_text = "i-wf >= 0";
    tsdb::AdapterSpec adapter;
    std::string run_comment;
    add_common(run_cmd, run_options);
    run_cmd->add_option("--select", select_text, "selection query or bare condition");
    run_cmd->add_option("--adapter", adapter.command, "adapter command line")->required();
    run_cmd->add_option("--timeout", adapter.timeout_ms, "per-item timeout in ms");
    run_cmd->add_option("--parallel", adapter.parallelism, "adapter processes");
    run_cmd->add_option("--comment", run_comment, "run comment");

    auto* diff_cmd = app.add_subcommand("diff", "compare two stored runs");
    CommonOptions diff_options;
    std::vector<int64_t> diff_run_ids;
    add_common(diff_cmd, diff_options);
    diff_cmd->add_option("--runs", diff_run_ids, "two run ids")->expected(2)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(shell_cmd)) {
            tsdb::ShellConfig config{shell_options.home, shell_options.language, shell_format};
            return tsdb::repl(config, std::cin, std::cout, std::cerr);
        }
        if (app.got_subcommand(query_cmd)) {
            tsdb::ShellConfig config{query_options.home, query_options.language, query_format};
            return tsdb::run_once(config, query_text, std::cout, std::cerr);
        }
        if (app.got_subcommand(check_cmd)) {
            tsdb::Database db = load(check_options);
            auto violations = tsdb::check_consistency(db);
            if (violations.empty()) {
                std::cout << "consistent\n";
                return 0;
            }
            for (const auto& violation : violations) {
                std::cout << tsdb::render_violation(violation) << '\n';
            }
            std::cout << '(' << violations.size() << " violations)\n";
            return 1;
        }
        if (app.got_subcommand(import_cmd)) {
            tsdb::Database db = load(import_options);
            std::ifstream file(import_file);
            if (!file) {
                std::cerr << "error: cannot read " << import_file << '\n';
                return 2;
            }
            tsdb::import_dump(db, file);
            tsdb::store_database(db, import_options.home);
            std::cout << "imported " << import_file << '\n';
            return 0;
        }
        if (app.got_subcommand(export_cmd)) {
            tsdb::Database db = load(export_options);
            std::ofstream file(export_file);
            if (!file) {
                std::cerr << "error: cannot write " << export_file << '\n';
                return 2;
            }
            tsdb::export_dump(db, file);
            return 0;
        }
        if (app.got_subcommand(serve_cmd)) {
            tsdb::Server server(load(serve_options));
            server.start(port);
            std::cout << "serving " << serve_options.language << " database on port "
                      << server.port() << '\n';
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            // the signal may land on any thread; poll the flag here
            while (!g_shutdown) {
                std::this_thread::sleep_for(std::chrono::milliseconds(100));
            }
            server.stop();
            return 0;
        }
        if (app.got_subcommand(generate_cmd)) {
            tsdb::Database db = load(generate_options);
            std::ifstream file(directives_file);
            if (!file) {
                std::cerr << "error: cannot read " << directives_file << '\n';
                return 2;
            }
            auto directives = tsdb::parse_directives(file);
            auto result = tsdb::make_test_set(db, base_id, directives);
            tsdb::store_database(db, generate_options.home);
            std::cout << "set " << result.set_id << " with items " << base_id;
            for (int64_t id : result.derived_item_ids) std::cout << ' ' << id;
            std::cout << '\n';
            return 0;
        }
        if (app.got_subcommand(expand_cmd)) {
            std::ifstream file(grammar_file);
            if (!file) {
                std::cerr << "error: cannot read " << grammar_file << '\n';
                return 2;
            }
            auto grammar = tsdb::parse_grammar(file);
            auto generated = tsdb::expand_grammar(grammar, expand_limit);
            tsdb::Database sink(tsdb::builtin_schema(), "generated");
            for (auto& item : generated) {
                int64_t id = tsdb::insert_record(sink, "item",
                                                 tsdb::item_to_record(item.item));
                for (auto span : item.spans) {
                    span.item_id = id;
                    tsdb::insert_record(sink, "analysis", tsdb::span_to_record(span));
                }
            }
            if (expand_out.empty()) {
                tsdb::export_dump(sink, std::cout);
            } else {
                std::ofstream out(expand_out);
                if (!out) {
                    std::cerr << "error: cannot write " << expand_out << '\n';
                    return 2;
                }
                tsdb::export_dump(sink, out);
            }
            return 0;
        }
        if (app.got_subcommand(run_cmd)) {
            tsdb::Database db = load(run_options);
            tsdb::Run metadata;
            metadata.application = adapter.command;
            char date[32] = "undated";
            std::time_t now = std::time(nullptr);
            std::strftime(date, sizeof date, "%Y-%m-%d", std::localtime(&now));
            metadata.date = date;
            metadata.environment = "cli";
            metadata.comment = run_comment;
            auto outcome = tsdb::run_cycle(db, select_text, adapter, metadata);
            tsdb::store_database(db, run_options.home);
            std::cout << tsdb::report_render(outcome.report);
            return 0;
        }
        if (app.got_subcommand(diff_cmd)) {
            tsdb::Database db = load(diff_options);
            auto diff = tsdb::diff_runs(db, diff_run_ids[0], diff_run_ids[1]);
            std::cout << tsdb::diff_render(diff, diff_run_ids[0], diff_run_ids[1]);
            return 0;
        }
    } catch (const tsdb::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
