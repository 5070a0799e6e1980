// SPDX-License-Identifier: Apache-2.0
#include "tsdb/grammar.hpp"

#include <algorithm>
#include <istream>
#include <set>
#include <sstream>

namespace tsdb {

namespace {

// One fully expanded rule element: its tokens, the spans it contributes,
// and its feature bundle when it is a lexical slot.
struct Expansion {
    std::vector<std::string> tokens;
    std::vector<AnalysisSpan> spans;  // positions relative to this expansion
    const std::map<std::string, std::string>* features = nullptr;
    bool via_malrule = false;
    int depth = 0;
};

class Expander {
public:
    Expander(const ProductionGrammar& grammar) : grammar_(grammar) {}

    std::vector<Expansion> expand_symbol(const std::string& symbol, int depth) {
        if (depth > grammar_.depth_bound) {
            throw GrammarError("depth bound " + std::to_string(grammar_.depth_bound) +
                               " exceeded while expanding \"" + symbol +
                               "\"; the grammar is cyclic or the bound too low");
        }
        std::vector<Expansion> out;
        auto slot = grammar_.lexicon.find(symbol);
        if (slot != grammar_.lexicon.end()) {
            for (const auto& entry : slot->second) {
                Expansion e;
                e.tokens = entry.tokens;
                AnalysisSpan span;
                span.position = {0, static_cast<int64_t>(entry.tokens.size())};
                span.instance = join_tokens(entry.tokens);
                span.category = entry.category;
                span.domain = span.position;  // annotated by the rule later
                e.spans.push_back(std::move(span));
                e.features = &entry.features;
                e.depth = depth;
                out.push_back(std::move(e));
            }
            return out;
        }

        bool found_rule = false;
        for (const auto& rule : grammar_.rules) {
            if (rule.lhs != symbol) continue;
            found_rule = true;
            expand_rule(rule, depth, out);
        }
        if (!found_rule) {
            throw GrammarError("symbol \"" + symbol +
                               "\" has neither rules nor lexicon entries");
        }
        return out;
    }

private:
    void expand_rule(const Rule& rule, int depth, std::vector<Expansion>& out) {
        // per-element alternatives, in declaration order
        std::vector<std::vector<Expansion>> alternatives;
        for (const auto& element : rule.elements) {
            switch (element.kind) {
                case RuleElement::Kind::literal: {
                    Expansion e;
                    e.tokens = element.literal_tokens;
                    e.depth = depth;
                    alternatives.push_back({std::move(e)});
                    break;
                }
                default:
                    alternatives.push_back(expand_symbol(element.symbol, depth + 1));
            }
            if (alternatives.back().empty()) return;  // no viable expansion
        }

        // odometer over the alternatives, rightmost fastest
        std::vector<size_t> pick(alternatives.size(), 0);
        while (true) {
            Expansion combined;
            combined.via_malrule = rule.malrule;
            bool constraints_ok = true;

            std::vector<const Expansion*> parts;
            for (size_t i = 0; i < alternatives.size(); ++i) {
                parts.push_back(&alternatives[i][pick[i]]);
            }
            for (const auto& constraint : rule.constraints) {
                const auto* left = parts[constraint.left - 1]->features;
                const auto* right = parts[constraint.right - 1]->features;
                for (const auto& feature : constraint.features) {
                    auto a = left->find(feature);
                    auto b = right->find(feature);
                    if (a == left->end() || b == right->end() || a->second != b->second) {
                        constraints_ok = false;
                        break;
                    }
                }
                if (!constraints_ok) break;
            }

            if (constraints_ok) {
                std::vector<TokenSpan> element_spans;
                for (size_t i = 0; i < parts.size(); ++i) {
                    int64_t offset = static_cast<int64_t>(combined.tokens.size());
                    element_spans.push_back(
                        {offset, offset + static_cast<int64_t>(parts[i]->tokens.size())});
                    for (const auto& token : parts[i]->tokens) {
                        combined.tokens.push_back(token);
                    }
                    for (AnalysisSpan span : parts[i]->spans) {
                        span.position = {span.position.start + offset, span.position.end + offset};
                        span.domain = {span.domain.start + offset, span.domain.end + offset};
                        combined.spans.push_back(std::move(span));
                    }
                    combined.via_malrule |= parts[i]->via_malrule;
                    combined.depth = std::max(combined.depth, parts[i]->depth);
                }
                // rule annotations attach to each element's top-level span
                for (size_t i = 0; i < rule.elements.size(); ++i) {
                    const RuleElement& element = rule.elements[i];
                    if (!element.function && !element.domain) continue;
                    for (auto& span : combined.spans) {
                        if (span.position != element_spans[i]) continue;
                        if (element.function) span.function = *element.function;
                        if (element.domain) {
                            if (element.domain->element == 0) {
                                int64_t length = computed_length(join_tokens(combined.tokens));
                                span.domain = {0, length};
                            } else {
                                span.domain = element_spans[element.domain->element - 1];
                            }
                        }
                        break;
                    }
                }
                // a single-slot rule passes the slot's features upward
                if (parts.size() == 1) combined.features = parts[0]->features;
                out.push_back(std::move(combined));
            }

            size_t column = alternatives.size();
            while (column > 0) {
                --column;
                if (++pick[column] < alternatives[column].size()) break;
                pick[column] = 0;
                if (column == 0) return;
            }
        }
    }

    const ProductionGrammar& grammar_;
};

}  // namespace

std::vector<GeneratedItem> expand_grammar(const ProductionGrammar& grammar, size_t limit) {
    if (grammar.start.empty()) throw GrammarError("grammar has no start symbol");
    Expander expander(grammar);
    std::vector<Expansion> expansions = expander.expand_symbol(grammar.start, 0);

    // breadth-first output: shallow derivations before deep ones, original
    // rule/lexicon order within a depth
    std::stable_sort(expansions.begin(), expansions.end(),
                     [](const Expansion& a, const Expansion& b) { return a.depth < b.depth; });

    auto to_item = [&](const Expansion& e, int64_t wellformedness) {
        GeneratedItem generated;
        generated.item.author = grammar.author;
        generated.item.date = grammar.date;
        generated.item.register_ = grammar.register_;
        generated.item.format = grammar.format;
        generated.item.origin = grammar.origin;
        generated.item.difficulty = 1;
        generated.item.wellformedness = wellformedness;
        generated.item.category = grammar.start;
        generated.item.input = join_tokens(e.tokens);
        generated.item.length = computed_length(generated.item.input);
        generated.spans = e.spans;
        return generated;
    };

    std::vector<GeneratedItem> out;
    std::set<std::string> wellformed_inputs;
    for (const auto& e : expansions) {
        if (e.via_malrule) continue;
        std::string input = join_tokens(e.tokens);
        if (computed_length(input) < 1) continue;  // punctuation-only derivation
        if (!wellformed_inputs.insert(input).second) continue;
        out.push_back(to_item(e, 1));
    }
    std::set<std::string> illformed_inputs;
    for (const auto& e : expansions) {
        if (!e.via_malrule) continue;
        std::string input = join_tokens(e.tokens);
        if (computed_length(input) < 1) continue;
        if (wellformed_inputs.contains(input)) continue;
        if (!illformed_inputs.insert(input).second) continue;
        out.push_back(to_item(e, 0));
    }
    if (out.size() > limit) out.resize(limit);
    return out;
}

namespace {

RuleElement parse_rule_element(const std::string& word, int line_no) {
    RuleElement element;
    if (word.size() >= 2 && word.front() == '"' && word.back() == '"') {
        element.kind = RuleElement::Kind::literal;
        element.literal_tokens = split_tokens(word.substr(1, word.size() - 2));
        if (element.literal_tokens.empty()) {
            throw GrammarError("grammar line " + std::to_string(line_no) +
                               ": empty literal token");
        }
        return element;
    }
    std::string body = word;
    // SYMBOL[:function[@domain]]
    auto colon = body.find(':');
    if (colon != std::string::npos) {
        std::string annotation = body.substr(colon + 1);
        body = body.substr(0, colon);
        auto at = annotation.find('@');
        if (at != std::string::npos) {
            std::string domain = annotation.substr(at + 1);
            annotation = annotation.substr(0, at);
            DomainRef ref;
            if (domain == "*") {
                ref.element = 0;
            } else {
                auto index = parse_int(domain);
                if (!index || *index < 1) {
                    throw GrammarError("grammar line " + std::to_string(line_no) +
                                       ": bad domain reference \"" + domain + "\"");
                }
                ref.element = static_cast<int>(*index);
            }
            element.domain = ref;
        }
        if (!annotation.empty()) element.function = annotation;
    }
    if (body.empty()) {
        throw GrammarError("grammar line " + std::to_string(line_no) + ": empty symbol");
    }
    element.symbol = body;
    element.kind = RuleElement::Kind::nonterminal;  // slot vs nonterminal resolved later
    return element;
}

Rule parse_rule_line(const std::string& text, bool malrule, int line_no) {
    auto parts = split_on(text, ';');
    std::istringstream head(parts[0]);
    Rule rule;
    rule.malrule = malrule;
    std::string lhs, arrow;
    if (!(head >> lhs >> arrow) || arrow != "->") {
        throw GrammarError("grammar line " + std::to_string(line_no) +
                           ": a rule reads \"LHS -> element...\"");
    }
    rule.lhs = lhs;
    std::string word;
    while (head >> word) rule.elements.push_back(parse_rule_element(word, line_no));
    if (rule.elements.empty()) {
        throw GrammarError("grammar line " + std::to_string(line_no) +
                           ": rule for \"" + lhs + "\" has no elements");
    }
    for (size_t i = 1; i < parts.size(); ++i) {
        std::istringstream clause(trim(parts[i]));
        std::string keyword;
        clause >> keyword;
        if (keyword != "agree") {
            throw GrammarError("grammar line " + std::to_string(line_no) +
                               ": unknown clause \"" + keyword + "\"");
        }
        AgreementConstraint constraint;
        if (!(clause >> constraint.left >> constraint.right)) {
            throw GrammarError("grammar line " + std::to_string(line_no) +
                               ": agree needs two element indices");
        }
        std::string feature;
        while (clause >> feature) constraint.features.push_back(feature);
        if (constraint.features.empty()) {
            throw GrammarError("grammar line " + std::to_string(line_no) +
                               ": agree needs at least one feature");
        }
        rule.constraints.push_back(std::move(constraint));
    }
    return rule;
}

}  // namespace

ProductionGrammar parse_grammar(std::istream& in) {
    ProductionGrammar grammar;
    std::string current_slot;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        bool indented = line.front() == ' ' || line.front() == '\t';

        if (indented) {
            if (current_slot.empty()) {
                throw GrammarError("grammar line " + std::to_string(line_no) +
                                   ": lexicon entry outside a slot block");
            }
            auto fields = split_on(stripped, '|');
            if (fields.size() < 2 || fields.size() > 3) {
                throw GrammarError("grammar line " + std::to_string(line_no) +
                                   ": a lexicon entry reads \"tokens | category | features\"");
            }
            LexEntry entry;
            entry.tokens = split_tokens(trim(fields[0]));
            if (entry.tokens.empty()) {
                throw GrammarError("grammar line " + std::to_string(line_no) +
                                   ": lexicon entry has no tokens");
            }
            entry.category = trim(fields[1]);
            if (fields.size() == 3) {
                std::istringstream features(trim(fields[2]));
                std::string pair;
                while (features >> pair) {
                    auto equals = pair.find('=');
                    if (equals == std::string::npos) {
                        throw GrammarError("grammar line " + std::to_string(line_no) +
                                           ": features read \"name=value\"");
                    }
                    entry.features[pair.substr(0, equals)] = pair.substr(equals + 1);
                }
            }
            grammar.lexicon[current_slot].push_back(std::move(entry));
            continue;
        }

        current_slot.clear();
        auto colon = stripped.find(':');
        if (colon == std::string::npos) {
            throw GrammarError("grammar line " + std::to_string(line_no) +
                               ": expected \"keyword: ...\"");
        }
        std::string keyword = trim(stripped.substr(0, colon));
        std::string rest = trim(stripped.substr(colon + 1));
        if (keyword == "start") {
            grammar.start = rest;
        } else if (keyword == "depth") {
            auto depth = parse_int(rest);
            if (!depth || *depth < 1) {
                throw GrammarError("grammar line " + std::to_string(line_no) +
                                   ": depth must be a positive integer");
            }
            grammar.depth_bound = static_cast<int>(*depth);
        } else if (keyword == "author") {
            grammar.author = rest;
        } else if (keyword == "date") {
            grammar.date = rest;
        } else if (keyword == "register") {
            grammar.register_ = rest;
        } else if (keyword == "format") {
            grammar.format = rest;
        } else if (keyword == "origin") {
            grammar.origin = rest;
        } else if (keyword == "rule") {
            grammar.rules.push_back(parse_rule_line(rest, false, line_no));
        } else if (keyword == "malrule") {
            grammar.rules.push_back(parse_rule_line(rest, true, line_no));
        } else if (keyword == "slot") {
            if (rest.empty()) {
                throw GrammarError("grammar line " + std::to_string(line_no) +
                                   ": slot needs a name");
            }
            current_slot = rest;
            grammar.lexicon[current_slot];
        } else {
            throw GrammarError("grammar line " + std::to_string(line_no) +
                               ": unknown keyword \"" + keyword + "\"");
        }
    }

    if (grammar.start.empty()) throw GrammarError("grammar has no start symbol");
    for (const auto& [slot, entries] : grammar.lexicon) {
        if (entries.empty()) {
            throw GrammarError("slot \"" + slot + "\" has no lexicon entries");
        }
    }
    // constraints may only reference lexical slot elements
    for (const auto& rule : grammar.rules) {
        for (const auto& constraint : rule.constraints) {
            for (int index : {constraint.left, constraint.right}) {
                if (index < 1 || index > static_cast<int>(rule.elements.size())) {
                    throw GrammarError("rule for \"" + rule.lhs +
                                       "\": agree references element " + std::to_string(index) +
                                       " which does not exist");
                }
                const RuleElement& element = rule.elements[index - 1];
                if (element.kind == RuleElement::Kind::literal ||
                    !grammar.lexicon.contains(element.symbol)) {
                    throw GrammarError("rule for \"" + rule.lhs +
                                       "\": agree applies to lexical slots only");
                }
            }
        }
        for (const auto& element : rule.elements) {
            if (element.domain && element.domain->element >
                                      static_cast<int>(rule.elements.size())) {
                throw GrammarError("rule for \"" + rule.lhs + "\": domain reference @" +
                                   std::to_string(element.domain->element) + " is out of range");
            }
        }
    }
    return grammar;
}

}  // namespace tsdb
