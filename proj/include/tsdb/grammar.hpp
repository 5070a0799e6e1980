// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tsdb/model.hpp"
#include "tsdb/text.hpp"

namespace tsdb {

class GrammarError : public Error {
public:
    using Error::Error;
};

/// A feature-equation context-free grammar that produces annotated test
/// items. Rules expand nonterminals over lexical slots and quoted literal
/// tokens; agreement constraints equate lexical features between slot
/// elements; malrules are constraint-relaxed twins whose derivations are
/// ill-formed.
struct LexEntry {
    std::vector<std::string> tokens;
    std::string category;
    std::map<std::string, std::string> features;
};

struct DomainRef {
    // 1-based rule element, or 0 for the whole item up to its length
    int element = 0;
};

struct RuleElement {
    enum class Kind { nonterminal, slot, literal } kind = Kind::nonterminal;
    std::string symbol;                   // nonterminal or slot name
    std::vector<std::string> literal_tokens;
    std::optional<std::string> function;  // annotation for the element's span
    std::optional<DomainRef> domain;
};

struct AgreementConstraint {
    int left = 0;   // 1-based rule elements; both must be lexical slots
    int right = 0;
    std::vector<std::string> features;
};

struct Rule {
    std::string lhs;
    std::vector<RuleElement> elements;
    std::vector<AgreementConstraint> constraints;
    bool malrule = false;
};

struct ProductionGrammar {
    std::string start;
    std::vector<Rule> rules;
    std::map<std::string, std::vector<LexEntry>> lexicon;
    int depth_bound = 8;
    // bookkeeping defaults for generated items
    std::string author = "genvar";
    std::string date = "undated";
    std::string register_ = "formal";
    std::string format = "none";
    std::string origin = "generated";
};

struct GeneratedItem {
    TestItem item;  // id unassigned
    std::vector<AnalysisSpan> spans;
};

/// Grammar file format (documented in README):
///   start: S
///   depth: 6
///   author: issco            (likewise date/register/format/origin)
///   rule: S -> NP:subj@2 V:func@* "."  ; agree 1 2 num pers
///   malrule: S -> NP:subj@2 V:func@* "."
///   slot: NP
///     L' ingénieur | NP_sg | num=sg pers=3
ProductionGrammar parse_grammar(std::istream& in);

/// Enumerates derivations breadth-first in stable rule and lexicon order:
/// well-formed items (ordinary rules, constraints satisfied) first, then
/// ill-formed malrule derivations whose input string is not already
/// generated well-formed. Truncated to limit. Throws when expansion
/// exceeds the grammar's depth bound.
std::vector<GeneratedItem> expand_grammar(const ProductionGrammar& grammar, size_t limit);

}  // namespace tsdb
