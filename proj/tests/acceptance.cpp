// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: runs every exit criterion at its stated tolerance and
// prints one pass/fail line per criterion.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <thread>
#include <vector>

#include "generators.hpp"
#include "tsdb/genvar.hpp"
#include "tsdb/harness.hpp"
#include "tsdb/query.hpp"
#include "tsdb/server.hpp"
#include "tsdb/storage.hpp"

using namespace tsdb;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = TSDB_FIXTURE_DIR;
const std::string kMockAdapter = TSDB_MOCK_ADAPTER;

const char* kAgreementQuery =
    "select i-id i-input"
    " where i-wf = 1 &"
    " p-name = \"C_Agreement\" &"
    " a-function = \"subj\" &"
    " a-category ~ \"^PRON\"";

struct Check {
    std::string name;
    double budget_seconds;
    std::function<void()> body;
};

void require(bool condition, const std::string& message) {
    if (!condition) throw std::runtime_error(message);
}

std::string render_record(const Record& record) {
    std::vector<std::string> fields;
    for (const auto& value : record) fields.push_back(render_value(value));
    return join_record_line(fields);
}

std::vector<std::string> file_lines(const fs::path& path) {
    std::ifstream file(path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(file, line)) lines.push_back(line);
    return lines;
}

// ---------------------------------------------------------------------------

void criterion_fixture_fidelity() {
    Database db = load_database(kFixtures, "fr");
    ResultTable table = run_query("select i-input where i-id = 24020101", db);
    require(table.rows.size() == 1, "expected exactly one row");
    require(std::get<std::string>(table.rows[0][0]) == "L' ingénieur vient .",
            "sample input mismatch");

    // stored analysis and phenomenon records equal the fixture lines byte
    // for byte
    std::vector<std::string> analysis_lines;
    for (const auto& record : db.records("analysis")) {
        analysis_lines.push_back(render_record(record));
    }
    require(analysis_lines == file_lines(kFixtures / "fr" / "analysis"),
            "analysis rows did not round-trip byte-identically");
    std::vector<std::string> phenomenon_lines;
    for (const auto& record : db.records("phenomenon")) {
        phenomenon_lines.push_back(render_record(record));
    }
    require(phenomenon_lines == file_lines(kFixtures / "fr" / "phenomenon"),
            "phenomenon record did not round-trip byte-identically");

    // and byte-identically through export -> import -> export
    std::ostringstream first_dump;
    export_dump(db, first_dump);
    Database imported(db.schema(), "fr");
    std::istringstream dump_in(first_dump.str());
    import_dump(imported, dump_in);
    std::ostringstream second_dump;
    export_dump(imported, second_dump);
    require(first_dump.str() == second_dump.str(), "dump round-trip is not byte-identical");
}

void criterion_example_query() {
    Database db = load_database(kFixtures, "fr");
    QueryAst ast = parse_query(kAgreementQuery, db.schema());
    require(render_query(ast) ==
                "select i-id i-input where i-wf = 1 & p-name = \"C_Agreement\" & "
                "a-function = \"subj\" & a-category ~ \"^PRON\"",
            "agreement query did not parse to the expected tree");

    JoinPlan plan = plan_query(ast, db.schema());
    auto names = plan.relation_names();
    std::set<std::string> relations(names.begin(), names.end());
    require(relations == std::set<std::string>{"item", "item-phenomenon", "phenomenon",
                                               "analysis"},
            "agreement query must plan over the four-relation closure");

    require(evaluate_query(ast, plan, db).rows.empty(),
            "the sample database has no pronominal subjects");

    // extend the fixture with an agreement phenomenon and two items with
    // pronominal subjects; the query must return exactly those two
    Phenomenon agreement;
    agreement.id = 2401;
    agreement.name = "C_Agreement";
    agreement.restrictions = "neutral";
    agreement.interaction = "none";
    agreement.purpose = "test";
    agreement.author = "issco";
    agreement.date = "jan-95";
    insert_record(db, "phenomenon", phenomenon_to_record(agreement));

    auto add_item = [&](int64_t id, const std::string& input, const std::string& subject,
                        const std::string& category) {
        TestItem item;
        item.id = id;
        item.author = "issco";
        item.date = "jan-95";
        item.register_ = "formal";
        item.format = "none";
        item.origin = "invented";
        item.wellformedness = 1;
        item.category = "S";
        item.input = input;
        item.length = computed_length(input);
        insert_record(db, "item", item_to_record(item));

        AnalysisSpan subj;
        subj.item_id = id;
        subj.position = {0, 1};
        subj.instance = subject;
        subj.category = category;
        subj.function = "subj";
        subj.domain = {1, 2};
        insert_record(db, "analysis", span_to_record(subj));
        insert_record(db, "item-phenomenon", Record{int64_t{0}, id, agreement.id});
    };
    add_item(24010101, "Il vient .", "Il", "PRON_3-sg");
    add_item(24010102, "Ils viennent .", "Ils", "PRON_3-pl");
    // a non-pronominal agreement item that must not match
    add_item(24010103, "L' ingénieur vient .", "L'", "NP_sg");

    ResultTable extended = evaluate_query(ast, plan, db);
    require(extended.delimited_lines() ==
                std::vector<std::string>{"24010101@Il vient .", "24010102@Ils viennent ."},
            "extended fixture must yield exactly the two pronominal-subject items");

    auto expected = testgen::oracle_rows(ast, plan.relation_names(), db);
    auto lines = extended.delimited_lines();
    require(std::set<std::string>(lines.begin(), lines.end()) == expected,
            "result differs from the brute-force oracle");
}

void criterion_oracle_equivalence() {
    std::mt19937_64 rng(20260808);
    int queries_checked = 0;
    for (int db_round = 0; db_round < 50; ++db_round) {
        Database db = testgen::loose_database(rng, 14);
        for (int query_round = 0; query_round < 20; ++query_round) {
            QueryAst ast = testgen::random_query(rng, db.schema());
            JoinPlan plan = plan_query(ast, db.schema());
            ResultTable table = evaluate_query(ast, plan, db);
            auto lines = table.delimited_lines();
            std::set<std::string> actual(lines.begin(), lines.end());
            auto expected = testgen::oracle_rows(ast, plan.relation_names(), db);
            require(actual == expected,
                    "oracle mismatch on query: " + render_query(ast));
            require(testgen::table_is_sorted_and_unique(table),
                    "result table violates the output order contract");
            ++queries_checked;
        }
    }
    require(queries_checked == 1000, "expected 1000 oracle comparisons");
}

void criterion_variation_goldens() {
    struct Golden {
        std::string source;
        VariationDirective directive;
        std::string expected;
    };
    auto replacement = [](TokenSpan target, const char* tokens) {
        VariationDirective d;
        d.kind = VariationDirective::Kind::replacement;
        d.target = target;
        d.tokens = split_tokens(tokens);
        return d;
    };
    VariationDirective addition;
    addition.kind = VariationDirective::Kind::addition;
    addition.insert_index = 3;
    addition.tokens = {"den", "Vortrag"};
    addition.category = "NP_acc";
    addition.function = "obj";
    VariationDirective deletion;
    deletion.kind = VariationDirective::Kind::deletion;
    deletion.target = {3, 5};
    VariationDirective permutation;
    permutation.kind = VariationDirective::Kind::permutation;
    permutation.target = {1, 2};
    permutation.second = {2, 4};

    std::vector<Golden> goldens = {
        {"L' ingénieur vient .", replacement({2, 3}, "viens"), "L' ingénieur viens ."},
        {"Der Manager arbeitet .", addition, "Der Manager arbeitet den Vortrag ."},
        {"Der Manager hält den Vortrag .", deletion, "Der Manager hält ."},
        {"He saw the boy .", permutation, "He the boy saw ."},
    };

    for (const auto& golden : goldens) {
        Database db(builtin_schema(), "en");
        TestItem source;
        source.id = 0;
        source.author = "issco";
        source.date = "jan-95";
        source.wellformedness = 1;
        source.category = "S";
        source.input = golden.source;
        source.length = computed_length(golden.source);
        int64_t base_id = insert_record(db, "item", item_to_record(source));

        auto result = make_test_set(db, base_id, {golden.directive});
        require(result.derived_item_ids.size() == 1, "one derived item expected");
        auto derived = find_item(db, result.derived_item_ids[0]);
        require(derived.has_value(), "derived item must exist");
        require(derived->input == golden.expected,
                "derived string mismatch: got \"" + derived->input + "\", want \"" +
                    golden.expected + "\"");
        require(derived->wellformedness == 0, "derived items are ill-formed");
        auto violations = check_consistency(db);
        require(violations.empty(), "variation left the database inconsistent");
    }
}

void criterion_round_trip() {
    std::mt19937_64 rng(424242);
    fs::path dir = fs::temp_directory_path() / ("tsdb_acceptance_rt_" +
                                                std::to_string(::getpid()));
    fs::remove_all(dir);
    const std::vector<std::string> nasty = {
        "", "@", "\\", "a@b", "a\\b", "line\nbreak", "trailing\\", ".", "..",
        "ingénieur ß", "@@@", "x \\@ y"};
    for (int round = 0; round < 200; ++round) {
        Database db(builtin_schema(), round % 2 ? "fr" : "de");
        for (const auto& decl : db.schema().relations()) {
            size_t rows = rng() % 7;
            auto keys = decl.key_indices();
            for (size_t row = 0; row < rows; ++row) {
                Record record;
                for (const auto& attr : decl.attributes) {
                    switch (attr.type) {
                        case AttrType::integer:
                            record.emplace_back(static_cast<int64_t>(rng() % 50) - 1);
                            break;
                        case AttrType::string:
                            record.emplace_back(nasty[rng() % nasty.size()]);
                            break;
                        case AttrType::position:
                            record.emplace_back(TokenSpan{static_cast<int64_t>(rng() % 5),
                                                          static_cast<int64_t>(5 + rng() % 5)});
                            break;
                    }
                }
                if (!keys.empty()) record[keys[0]] = static_cast<int64_t>(row + 1);
                db.records_mutable(decl.name).push_back(std::move(record));
            }
        }
        if (rng() % 2) db.set_taxonomy({"C_Agreement", "NP_Agreement"});
        store_database(db, dir);
        Database reloaded = load_database(dir, db.language());
        require(db == reloaded, "store/load round-trip lost a record");
    }
    fs::remove_all(dir);
}

void criterion_local_remote() {
    auto snapshot_home = [&] {
        std::map<std::string, std::string> contents;
        for (const auto& entry : fs::recursive_directory_iterator(kFixtures)) {
            if (!entry.is_regular_file()) continue;
            std::ifstream file(entry.path(), std::ios::binary);
            contents[entry.path().string()] =
                std::string((std::istreambuf_iterator<char>(file)),
                            std::istreambuf_iterator<char>());
        }
        return contents;
    };
    auto before = snapshot_home();

    Database db = load_database(kFixtures, "fr");
    Server server(db);
    server.start(0);

    // 100 randomized queries, split over 8 concurrent clients, each
    // compared byte for byte with local evaluation
    std::mt19937_64 rng(1234);
    std::vector<std::string> texts;
    std::vector<std::vector<std::string>> expected;
    for (int i = 0; i < 100; ++i) {
        QueryAst ast = testgen::random_query(rng, db.schema());
        texts.push_back(render_query(ast));
        expected.push_back(
            evaluate_query(ast, plan_query(ast, db.schema()), db).delimited_lines());
    }
    std::atomic<int> mismatches{0};
    std::atomic<size_t> cursor{0};
    std::vector<std::thread> clients;
    for (int c = 0; c < 8; ++c) {
        clients.emplace_back([&] {
            while (true) {
                size_t index = cursor.fetch_add(1);
                if (index >= texts.size()) break;
                try {
                    RemoteTable remote =
                        remote_query("127.0.0.1", server.port(), texts[index]);
                    if (remote.rows != expected[index]) ++mismatches;
                } catch (...) {
                    ++mismatches;
                }
            }
        });
    }
    for (auto& client : clients) client.join();
    require(mismatches == 0, "remote evaluation diverged from local evaluation");

    bool rejected = false;
    try {
        remote_query("127.0.0.1", server.port(), "\\import x");
    } catch (const RemoteError& e) {
        rejected = e.code() == 400;
    }
    require(rejected, "mutating verbs must answer ERR 400");

    server.stop();
    require(snapshot_home() == before, "the server must not write to the home directory");
}

void criterion_harness_arithmetic() {
    auto two_item_db = [] {
        Database db = load_database(kFixtures, "fr");
        VariationDirective directive;
        directive.kind = VariationDirective::Kind::replacement;
        directive.target = {2, 3};
        directive.tokens = {"viens"};
        make_test_set(db, 24020101, {directive});
        return db;
    };
    Run metadata{0, "mock", "jan-95", "acceptance", ""};

    Database db = two_item_db();
    auto accepting = run_cycle(db, "select i-id", {kMockAdapter + " 3", 5000, 1}, metadata);
    std::string accepting_report = report_render(accepting.report);
    require(accepting_report.find("coverage 100.0%") != std::string::npos,
            "length-3 adapter must reach 100.0% coverage");
    require(accepting_report.find("overgeneration 100.0%") != std::string::npos,
            "length-3 adapter must reach 100.0% overgeneration");

    auto rejecting =
        run_cycle(db, "select i-id", {kMockAdapter + " --reject-all", 5000, 1}, metadata);
    std::string rejecting_report = report_render(rejecting.report);
    require(rejecting_report.find("coverage 0.0%") != std::string::npos,
            "all-reject adapter must reach 0.0% coverage");
    require(rejecting_report.find("overgeneration 0.0%") != std::string::npos,
            "all-reject adapter must reach 0.0% overgeneration");

    auto diff = diff_runs(db, rejecting.run_id, accepting.run_id);
    require(diff.newly_accepted_wellformed == std::vector<int64_t>{24020101},
            "diff must report exactly the well-formed item as newly accepted");
    require(diff.newly_accepted_illformed == std::vector<int64_t>{24020102},
            "diff must report exactly the ill-formed item as newly accepted");
    require(diff.newly_rejected_wellformed.empty() && diff.newly_rejected_illformed.empty(),
            "no newly rejected items expected");

    // parallelism 4 equals parallelism 1 modulo time_ms
    Database serial_db = two_item_db();
    Database parallel_db = two_item_db();
    auto serial =
        run_cycle(serial_db, "select i-id", {kMockAdapter + " 3", 5000, 1}, metadata);
    auto parallel =
        run_cycle(parallel_db, "select i-id", {kMockAdapter + " 3", 5000, 4}, metadata);
    require(serial.outcomes.size() == parallel.outcomes.size(), "outcome counts differ");
    for (size_t i = 0; i < serial.outcomes.size(); ++i) {
        require(serial.outcomes[i].item_id == parallel.outcomes[i].item_id &&
                    serial.outcomes[i].accepted == parallel.outcomes[i].accepted &&
                    serial.outcomes[i].readings == parallel.outcomes[i].readings &&
                    serial.outcomes[i].flags == parallel.outcomes[i].flags,
                "parallel run diverged from the serial run");
    }
}

void criterion_consistency_suite() {
    Database clean = load_database(kFixtures, "fr");
    require(check_consistency(clean).empty(), "the clean fixture must report no violations");

    auto detects = [&](const std::string& rule, std::function<void(Database&)> sabotage) {
        Database db = load_database(kFixtures, "fr");
        sabotage(db);
        auto violations = check_consistency(db);
        for (const auto& violation : violations) {
            if (violation.rule == rule) return;
        }
        throw std::runtime_error("violation class \"" + rule + "\" was not detected");
    };

    // 1: bad wellformedness code
    detects("wellformedness-code", [](Database& db) {
        db.records_mutable("item")[0][7] = int64_t{7};
    });
    // 2: bad length
    detects("length-formula", [](Database& db) {
        db.records_mutable("item")[0][10] = int64_t{9};
    });
    // 3: span out of bounds
    detects("span-bounds", [](Database& db) {
        db.records_mutable("analysis")[0][1] = TokenSpan{3, 9};
    });
    // 4: instance mismatch
    detects("instance-mismatch", [](Database& db) {
        db.records_mutable("analysis")[0][2] = std::string("L'ingénieur");
    });
    // 5: dangling analysis -> item reference
    detects("dangling-reference", [](Database& db) {
        db.records_mutable("analysis")[0][0] = int64_t{999};
    });
    // 6: dangling item-phenomenon -> phenomenon reference
    detects("dangling-reference", [](Database& db) {
        db.records_mutable("item-phenomenon")[0][2] = int64_t{999};
    });
    // 7: dangling result -> run reference
    detects("dangling-reference", [](Database& db) {
        insert_record(db, "result",
                      result_to_record({77, 24020101, 1, 1, 5, "", ""}));
    });
    // 8: supertype cycle
    detects("supertype-cycle", [](Database& db) {
        Phenomenon p;
        p.id = 9001;
        p.name = "Loop";
        p.supertypes = {"Loop"};
        insert_record(db, "phenomenon", phenomenon_to_record(p));
    });
    // 9: presupposition cycle
    detects("presupposition-cycle", [](Database& db) {
        Phenomenon a, b;
        a.id = 9001;
        a.name = "A";
        a.presupposition = {"B"};
        b.id = 9002;
        b.name = "B";
        b.presupposition = {"A"};
        insert_record(db, "phenomenon", phenomenon_to_record(a));
        insert_record(db, "phenomenon", phenomenon_to_record(b));
    });
    // 10: undersized set
    detects("set-size", [](Database& db) {
        insert_record(db, "set", Record{int64_t{1}, int64_t{24020101}});
    });
}

}  // namespace

int main() {
    std::vector<Check> checks = {
        {"1 fixture fidelity", 1.0, criterion_fixture_fidelity},
        {"2 agreement example query", 1.0, criterion_example_query},
        {"3 oracle equivalence (1000 queries / 50 databases)", 60.0,
         criterion_oracle_equivalence},
        {"4 variation golden strings", 1.0, criterion_variation_goldens},
        {"5 round-trip property (200 databases)", 30.0, criterion_round_trip},
        {"6 local/remote equivalence (100 queries / 8 clients)", 30.0, criterion_local_remote},
        {"7 harness arithmetic", 10.0, criterion_harness_arithmetic},
        {"8 consistency violation suite", 5.0, criterion_consistency_suite},
    };

    int failures = 0;
    for (const auto& check : checks) {
        auto start = std::chrono::steady_clock::now();
        std::string failure;
        try {
            check.body();
        } catch (const std::exception& e) {
            failure = e.what();
        }
        double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (failure.empty() && elapsed > check.budget_seconds) {
            failure = "runtime " + std::to_string(elapsed) + "s exceeds " +
                      std::to_string(check.budget_seconds) + "s";
        }
        if (failure.empty()) {
            std::printf("PASS  %-52s (%.2fs)\n", check.name.c_str(), elapsed);
        } else {
            std::printf("FAIL  %-52s (%.2fs): %s\n", check.name.c_str(), elapsed,
                        failure.c_str());
            ++failures;
        }
    }
    if (failures > 0) {
        std::printf("%d of %zu criteria failed\n", failures, checks.size());
        return 1;
    }
    std::printf("all %zu criteria passed\n", checks.size());
    return 0;
}
