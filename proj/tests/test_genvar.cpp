// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tsdb/genvar.hpp"
#include "tsdb/grammar.hpp"
#include "tsdb/query.hpp"

using namespace tsdb;

namespace {

const std::filesystem::path kFixtures = TSDB_FIXTURE_DIR;

TestItem item_with(const std::string& input) {
    TestItem item;
    item.id = 1;
    item.author = "t";
    item.date = "jan-95";
    item.wellformedness = 1;
    item.category = "S";
    item.input = input;
    item.length = computed_length(input);
    return item;
}

AnalysisSpan span_of(const TestItem& item, int64_t start, int64_t end,
                     const std::string& category, const std::string& function,
                     int64_t domain_start, int64_t domain_end) {
    AnalysisSpan span;
    span.item_id = item.id;
    span.position = {start, end};
    auto tokens = split_tokens(item.input);
    std::vector<std::string> slice(tokens.begin() + start, tokens.begin() + end);
    span.instance = join_tokens(slice);
    span.category = category;
    span.function = function;
    span.domain = {domain_start, domain_end};
    return span;
}

VariationDirective replacement(TokenSpan target, const std::string& tokens) {
    VariationDirective d;
    d.kind = VariationDirective::Kind::replacement;
    d.target = target;
    d.tokens = split_tokens(tokens);
    return d;
}

}  // namespace

TEST_CASE("replacement: person mismatch inside subject-verb agreement") {
    TestItem source = item_with("L' ingénieur vient .");
    std::vector<AnalysisSpan> spans = {span_of(source, 0, 2, "NP_sg", "subj", 2, 3),
                                       span_of(source, 2, 3, "V_3-sg", "func", 0, 3)};
    auto directive = replacement({2, 3}, "viens");
    directive.category = "V_1-sg";
    DerivedItem derived = apply_variation(source, spans, directive);

    CHECK(derived.item.input == "L' ingénieur viens .");
    CHECK(derived.item.wellformedness == 0);
    CHECK(derived.item.length == 3);
    CHECK(derived.item.comment == "derived:1:replacement");

    REQUIRE(derived.spans.size() == 2);
    CHECK(derived.spans[0].instance == "L' ingénieur");
    CHECK(derived.spans[0].position == TokenSpan{0, 2});
    CHECK(derived.spans[1].instance == "viens");
    CHECK(derived.spans[1].category == "V_1-sg");  // override hit the target span
    CHECK(derived.spans[1].domain == TokenSpan{0, 3});

    for (const auto& span : derived.spans) {
        AnalysisSpan rebased = span;
        rebased.item_id = derived.item.id = 1;
        CHECK(validate_span(rebased, derived.item).empty());
    }
    CHECK(validate_item(derived.item).empty());
}

TEST_CASE("addition: object NP after an intransitive verb") {
    TestItem source = item_with("Der Manager arbeitet .");
    std::vector<AnalysisSpan> spans = {span_of(source, 0, 2, "NP_nom", "subj", 2, 3),
                                       span_of(source, 2, 3, "V_3-sg", "func", 0, 3)};
    VariationDirective directive;
    directive.kind = VariationDirective::Kind::addition;
    directive.insert_index = 3;
    directive.tokens = {"den", "Vortrag"};
    directive.category = "NP_acc";
    directive.function = "obj";
    DerivedItem derived = apply_variation(source, spans, directive);

    CHECK(derived.item.input == "Der Manager arbeitet den Vortrag .");
    CHECK(derived.item.wellformedness == 0);
    CHECK(derived.item.length == 5);
    CHECK(derived.item.comment == "derived:1:addition");

    REQUIRE(derived.spans.size() == 3);
    CHECK(derived.spans[0].position == TokenSpan{0, 2});  // untouched subject
    CHECK(derived.spans[1].position == TokenSpan{2, 3});  // verb keeps its place
    CHECK(derived.spans[2].position == TokenSpan{3, 5});
    CHECK(derived.spans[2].instance == "den Vortrag");
    CHECK(derived.spans[2].category == "NP_acc");
    CHECK(derived.spans[2].function == "obj");
}

TEST_CASE("deletion: obligatory complement removed") {
    TestItem source = item_with("Der Manager hält den Vortrag .");
    std::vector<AnalysisSpan> spans = {span_of(source, 0, 2, "NP_nom", "subj", 2, 3),
                                       span_of(source, 2, 3, "V_3-sg", "func", 0, 5),
                                       span_of(source, 3, 5, "NP_acc", "obj", 2, 3)};
    VariationDirective directive;
    directive.kind = VariationDirective::Kind::deletion;
    directive.target = {3, 5};
    DerivedItem derived = apply_variation(source, spans, directive);

    CHECK(derived.item.input == "Der Manager hält .");
    CHECK(derived.item.wellformedness == 0);
    CHECK(derived.item.length == 3);
    CHECK(derived.item.comment == "derived:1:deletion");

    REQUIRE(derived.spans.size() == 2);  // the object span is gone
    CHECK(derived.spans[0].position == TokenSpan{0, 2});
    CHECK(derived.spans[1].position == TokenSpan{2, 3});
    CHECK(derived.spans[1].domain == TokenSpan{0, 3});  // clause domain shrank
}

TEST_CASE("permutation: verb and object inverted") {
    TestItem source = item_with("He saw the boy .");
    std::vector<AnalysisSpan> spans = {span_of(source, 0, 1, "NP_nom", "subj", 1, 2),
                                       span_of(source, 1, 2, "V_past", "func", 0, 4),
                                       span_of(source, 2, 4, "NP_acc", "obj", 1, 2)};
    VariationDirective directive;
    directive.kind = VariationDirective::Kind::permutation;
    directive.target = {1, 2};
    directive.second = {2, 4};
    DerivedItem derived = apply_variation(source, spans, directive);

    CHECK(derived.item.input == "He the boy saw .");
    CHECK(derived.item.wellformedness == 0);
    CHECK(derived.item.length == 4);
    CHECK(derived.item.comment == "derived:1:permutation");

    // the verb's whole-clause domain straddles both swapped zones, so the
    // functor row is dropped; subject and object survive remapped
    REQUIRE(derived.spans.size() == 2);
    CHECK(derived.spans[0].instance == "He");
    CHECK(derived.spans[0].position == TokenSpan{0, 1});
    CHECK(derived.spans[0].domain == TokenSpan{3, 4});  // follows the verb
    CHECK(derived.spans[1].instance == "the boy");
    CHECK(derived.spans[1].position == TokenSpan{1, 3});
    CHECK(derived.spans[1].domain == TokenSpan{3, 4});
}

TEST_CASE("variation preconditions and bounds") {
    TestItem source = item_with("He saw the boy .");
    std::vector<AnalysisSpan> spans;

    SUBCASE("ill-formed source is rejected") {
        source.wellformedness = 0;
        CHECK_THROWS_AS(apply_variation(source, spans, replacement({0, 1}, "x")), GenvarError);
    }
    SUBCASE("out of bounds span") {
        CHECK_THROWS_WITH_AS(apply_variation(source, spans, replacement({9, 10}, "x")),
                             doctest::Contains("out of bounds"), GenvarError);
    }
    SUBCASE("overlapping permutation spans") {
        VariationDirective d;
        d.kind = VariationDirective::Kind::permutation;
        d.target = {0, 2};
        d.second = {1, 3};
        CHECK_THROWS_WITH_AS(apply_variation(source, spans, d), doctest::Contains("overlap"),
                             GenvarError);
    }
    SUBCASE("deleting everything is rejected") {
        VariationDirective d;
        d.kind = VariationDirective::Kind::deletion;
        d.target = {0, 5};
        CHECK_THROWS_AS(apply_variation(source, spans, d), GenvarError);
    }
    SUBCASE("leaving only punctuation is rejected") {
        VariationDirective d;
        d.kind = VariationDirective::Kind::deletion;
        d.target = {0, 4};  // keeps just "."
        CHECK_THROWS_WITH_AS(apply_variation(source, spans, d),
                             doctest::Contains("no non-punctuation token"), GenvarError);
    }
}

TEST_CASE("tokens outside the edited spans never change") {
    TestItem source = item_with("Der Manager hält den Vortrag .");
    std::vector<AnalysisSpan> spans;
    auto tokens = split_tokens(source.input);

    DerivedItem deleted = apply_variation(source, spans, [&] {
        VariationDirective d;
        d.kind = VariationDirective::Kind::deletion;
        d.target = {3, 5};
        return d;
    }());
    auto deleted_tokens = split_tokens(deleted.item.input);
    CHECK(deleted_tokens[0] == tokens[0]);
    CHECK(deleted_tokens[1] == tokens[1]);
    CHECK(deleted_tokens[2] == tokens[2]);
    CHECK(deleted_tokens[3] == tokens[5]);

    // deletion then re-addition of the same tokens restores the input
    VariationDirective back;
    back.kind = VariationDirective::Kind::addition;
    back.insert_index = 3;
    back.tokens = {tokens[3], tokens[4]};
    back.category = "NP_acc";
    TestItem intermediate = deleted.item;
    intermediate.wellformedness = 1;  // re-arm the source precondition
    DerivedItem restored = apply_variation(intermediate, {}, back);
    CHECK(restored.item.input == source.input);
}

TEST_CASE("make_test_set inserts derived items and the grouping set") {
    Database db = load_database(kFixtures, "fr");
    auto result = make_test_set(db, 24020101, {replacement({2, 3}, "viens")});

    CHECK(result.set_id == 1);
    REQUIRE(result.derived_item_ids.size() == 1);
    CHECK(result.derived_item_ids[0] == 24020102);  // allocation is max id + 1

    CHECK(db.records("item").size() == 2);
    CHECK(db.records("analysis").size() == 4);
    CHECK(db.records("item-phenomenon").size() == 2);  // link copied to the twin
    CHECK(db.records("set").size() == 2);

    auto violations = check_consistency(db);
    for (const auto& v : violations) MESSAGE(render_violation(v));
    CHECK(violations.empty());

    auto derived = find_item(db, 24020102);
    REQUIRE(derived.has_value());
    CHECK(derived->input == "L' ingénieur viens .");
    CHECK(derived->wellformedness == 0);
    CHECK(derived->comment == "derived:24020101:replacement");
}

TEST_CASE("make_test_set is atomic") {
    Database db = load_database(kFixtures, "fr");
    Database before = db;

    SUBCASE("empty directive list") {
        CHECK_THROWS_WITH_AS(make_test_set(db, 24020101, {}), doctest::Contains("at least one"),
                             GenvarError);
        CHECK(db == before);
    }
    SUBCASE("out-of-bounds directive") {
        CHECK_THROWS_AS(make_test_set(db, 24020101,
                                      {replacement({2, 3}, "viens"), replacement({9, 10}, "x")}),
                        GenvarError);
        CHECK(db == before);
    }
    SUBCASE("unknown base item") {
        CHECK_THROWS_AS(make_test_set(db, 999, {replacement({0, 1}, "x")}), GenvarError);
        CHECK(db == before);
    }
}

TEST_CASE("directive file parsing") {
    std::istringstream in(
        "# comment\n"
        "replacement@2:3@viens@V_1-sg@func\n"
        "addition@3@den Vortrag@NP_acc@obj\n"
        "deletion@3:5\n"
        "permutation@1:2@2:4\n");
    auto directives = parse_directives(in);
    REQUIRE(directives.size() == 4);
    CHECK(directives[0].kind == VariationDirective::Kind::replacement);
    CHECK(directives[0].target == TokenSpan{2, 3});
    CHECK(directives[0].tokens == std::vector<std::string>{"viens"});
    CHECK(directives[0].category == "V_1-sg");
    CHECK(directives[1].kind == VariationDirective::Kind::addition);
    CHECK(directives[1].insert_index == 3);
    CHECK(directives[1].tokens == std::vector<std::string>{"den", "Vortrag"});
    CHECK(directives[2].kind == VariationDirective::Kind::deletion);
    CHECK(directives[3].kind == VariationDirective::Kind::permutation);
    CHECK(directives[3].second == TokenSpan{2, 4});

    // token fields honor the record escaping rules
    std::istringstream escaped("replacement@0:1@a\\@b c\n");
    auto with_escape = parse_directives(escaped);
    REQUIRE(with_escape.size() == 1);
    CHECK(with_escape[0].tokens == std::vector<std::string>{"a@b", "c"});

    std::istringstream bad("teleportation@1:2\n");
    CHECK_THROWS_WITH_AS(parse_directives(bad), doctest::Contains("unknown operation"),
                         GenvarError);
    std::istringstream bad_span("deletion@nope\n");
    CHECK_THROWS_WITH_AS(parse_directives(bad_span), doctest::Contains("line 1"), GenvarError);
}

TEST_CASE("grammar expansion reproduces the sample item exactly") {
    std::ifstream file(kFixtures / "grammars" / "agreement_fr.tsg");
    REQUIRE(file.good());
    ProductionGrammar grammar = parse_grammar(file);
    auto generated = expand_grammar(grammar, 10);

    REQUIRE(generated.size() == 1);
    const GeneratedItem& item = generated[0];
    CHECK(item.item.input == "L' ingénieur vient .");
    CHECK(item.item.length == 3);
    CHECK(item.item.wellformedness == 1);
    CHECK(item.item.category == "S");
    CHECK(item.item.author == "issco");

    REQUIRE(item.spans.size() == 2);
    CHECK(item.spans[0].position == TokenSpan{0, 2});
    CHECK(item.spans[0].instance == "L' ingénieur");
    CHECK(item.spans[0].category == "NP_sg");
    CHECK(item.spans[0].function == "subj");
    CHECK(item.spans[0].domain == TokenSpan{2, 3});
    CHECK(item.spans[1].position == TokenSpan{2, 3});
    CHECK(item.spans[1].instance == "vient");
    CHECK(item.spans[1].category == "V_3-sg");
    CHECK(item.spans[1].function == "func");
    CHECK(item.spans[1].domain == TokenSpan{0, 3});
}

TEST_CASE("malrule expansion adds the ill-formed twin") {
    std::ifstream file(kFixtures / "grammars" / "agreement_fr_mal.tsg");
    REQUIRE(file.good());
    ProductionGrammar grammar = parse_grammar(file);
    auto generated = expand_grammar(grammar, 10);

    REQUIRE(generated.size() == 2);
    CHECK(generated[0].item.input == "L' ingénieur vient .");
    CHECK(generated[0].item.wellformedness == 1);
    CHECK(generated[1].item.input == "L' ingénieur viens .");
    CHECK(generated[1].item.wellformedness == 0);
    CHECK(generated[1].spans[1].category == "V_1-sg");

    // malrule output is a superset; the well-formed rows are identical
    std::ifstream plain_file(kFixtures / "grammars" / "agreement_fr.tsg");
    auto plain = expand_grammar(parse_grammar(plain_file), 10);
    REQUIRE(plain.size() == 1);
    CHECK(plain[0].item.input == generated[0].item.input);
    CHECK(plain[0].spans.size() == generated[0].spans.size());

    // every generated item satisfies the model rules
    for (const auto& g : generated) {
        TestItem item = g.item;
        item.id = 1;
        CHECK(validate_item(item).empty());
        for (auto span : g.spans) {
            span.item_id = 1;
            CHECK(validate_span(span, item).empty());
        }
    }
}

TEST_CASE("expansion limits and degenerate grammars") {
    std::ifstream file(kFixtures / "grammars" / "agreement_fr_mal.tsg");
    ProductionGrammar grammar = parse_grammar(file);
    CHECK(expand_grammar(grammar, 0).empty());
    CHECK(expand_grammar(grammar, 1).size() == 1);

    std::istringstream cyclic(
        "start: S\n"
        "depth: 3\n"
        "rule: S -> S \".\"\n");
    ProductionGrammar looping = parse_grammar(cyclic);
    CHECK_THROWS_WITH_AS(expand_grammar(looping, 10), doctest::Contains("depth"), GrammarError);

    std::istringstream unknown(
        "start: S\n"
        "rule: S -> NP\n");
    CHECK_THROWS_WITH_AS(expand_grammar(parse_grammar(unknown), 10),
                         doctest::Contains("neither rules nor lexicon"), GrammarError);

    std::istringstream bad_agree(
        "start: S\n"
        "rule: S -> NP \".\" ; agree 1 2 num\n"
        "slot: NP\n"
        "  x | X |\n");
    CHECK_THROWS_AS(parse_grammar(bad_agree), GrammarError);
}

TEST_CASE("nested rules compose spans with offsets") {
    std::istringstream text(
        "start: S\n"
        "rule: S -> NP:subj@2 VP \".\"\n"
        "rule: VP -> V:func@* ADV\n"
        "slot: NP\n"
        "  the cat | NP_sg | num=sg\n"
        "slot: V\n"
        "  sleeps | V_3-sg | num=sg\n"
        "slot: ADV\n"
        "  soundly | ADV |\n");
    ProductionGrammar grammar = parse_grammar(text);
    auto generated = expand_grammar(grammar, 10);
    REQUIRE(generated.size() == 1);
    CHECK(generated[0].item.input == "the cat sleeps soundly .");
    REQUIRE(generated[0].spans.size() == 3);
    // NP at 0:2, V at 2:3 (func domain spans the whole VP-internal clause),
    // ADV at 3:4
    CHECK(generated[0].spans[0].position == TokenSpan{0, 2});
    CHECK(generated[0].spans[1].position == TokenSpan{2, 3});
    CHECK(generated[0].spans[1].function == "func");
    CHECK(generated[0].spans[2].position == TokenSpan{3, 4});
    CHECK(generated[0].spans[2].instance == "soundly");
}
