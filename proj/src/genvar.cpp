// SPDX-License-Identifier: Apache-2.0
#include "tsdb/genvar.hpp"

#include <algorithm>
#include <istream>

#include "tsdb/text.hpp"

namespace tsdb {

std::string variation_kind_name(VariationDirective::Kind kind) {
    switch (kind) {
        case VariationDirective::Kind::replacement: return "replacement";
        case VariationDirective::Kind::addition: return "addition";
        case VariationDirective::Kind::deletion: return "deletion";
        case VariationDirective::Kind::permutation: return "permutation";
    }
    return "?";
}

namespace {

bool spans_intersect(const TokenSpan& a, const TokenSpan& b) {
    return a.start < b.end && a.end > b.start;
}

void require_in_bounds(const TokenSpan& span, int64_t token_count, const std::string& what) {
    if (span.start < 0 || span.start >= span.end || span.end > token_count) {
        throw GenvarError(what + " " + render_span(span) + " is out of bounds for " +
                          std::to_string(token_count) + " tokens");
    }
}

std::string slice_tokens(const std::vector<std::string>& tokens, const TokenSpan& span) {
    std::vector<std::string> slice(tokens.begin() + span.start, tokens.begin() + span.end);
    return join_tokens(slice);
}

// Rebuilds the surviving spans against the new token list. remap_start /
// remap_end map old boundaries to new ones and return nullopt when a
// boundary falls inside the edited region; keep_position decides whether
// a position span survives at all.
struct SpanRewriter {
    std::function<std::optional<int64_t>(int64_t)> remap_start;
    std::function<std::optional<int64_t>(int64_t)> remap_end;
    std::function<bool(const TokenSpan&)> keep_position;

    std::vector<AnalysisSpan> rewrite(const std::vector<AnalysisSpan>& spans,
                                      const std::vector<std::string>& new_tokens) const {
        std::vector<AnalysisSpan> out;
        for (const auto& span : spans) {
            if (!keep_position(span.position)) continue;
            auto pos_start = remap_start(span.position.start);
            auto pos_end = remap_end(span.position.end);
            auto dom_start = remap_start(span.domain.start);
            auto dom_end = remap_end(span.domain.end);
            if (!pos_start || !pos_end || !dom_start || !dom_end) continue;
            if (*pos_start >= *pos_end || *dom_start >= *dom_end) continue;
            AnalysisSpan moved = span;
            moved.position = {*pos_start, *pos_end};
            moved.domain = {*dom_start, *dom_end};
            moved.instance = slice_tokens(new_tokens, moved.position);
            out.push_back(std::move(moved));
        }
        return out;
    }
};

}  // namespace

DerivedItem apply_variation(const TestItem& source, const std::vector<AnalysisSpan>& spans,
                            const VariationDirective& directive) {
    if (source.wellformedness != 1) {
        throw GenvarError("item " + std::to_string(source.id) +
                          " is not well-formed; variation sources must have wellformedness 1");
    }
    std::vector<std::string> tokens = split_tokens(source.input);
    int64_t n = static_cast<int64_t>(tokens.size());

    std::vector<std::string> new_tokens;
    std::vector<AnalysisSpan> new_spans;

    switch (directive.kind) {
        case VariationDirective::Kind::replacement: {
            require_in_bounds(directive.target, n, "replacement span");
            if (directive.tokens.empty()) {
                throw GenvarError("replacement needs at least one token");
            }
            const TokenSpan& target = directive.target;
            int64_t removed = target.end - target.start;
            int64_t added = static_cast<int64_t>(directive.tokens.size());

            new_tokens.assign(tokens.begin(), tokens.begin() + target.start);
            new_tokens.insert(new_tokens.end(), directive.tokens.begin(),
                              directive.tokens.end());
            new_tokens.insert(new_tokens.end(), tokens.begin() + target.end, tokens.end());

            if (removed == added) {
                // indices preserved; instances re-derived below
                SpanRewriter rewriter{
                    [](int64_t x) { return std::optional<int64_t>(x); },
                    [](int64_t x) { return std::optional<int64_t>(x); },
                    [](const TokenSpan&) { return true; }};
                new_spans = rewriter.rewrite(spans, new_tokens);
                for (auto& span : new_spans) {
                    if (span.position == target) {
                        if (directive.category) span.category = *directive.category;
                        if (directive.function) span.function = *directive.function;
                    }
                }
            } else {
                int64_t shift = added - removed;
                SpanRewriter rewriter{
                    [&](int64_t x) -> std::optional<int64_t> {
                        if (x <= target.start) return x;
                        if (x >= target.end) return x + shift;
                        return std::nullopt;
                    },
                    [&](int64_t y) -> std::optional<int64_t> {
                        if (y <= target.start) return y;
                        if (y >= target.end) return y + shift;
                        return std::nullopt;
                    },
                    [&](const TokenSpan& position) { return !spans_intersect(position, target); }};
                new_spans = rewriter.rewrite(spans, new_tokens);
                if (directive.category) {
                    AnalysisSpan fresh;
                    fresh.item_id = source.id;
                    fresh.position = {target.start, target.start + added};
                    fresh.instance = slice_tokens(new_tokens, fresh.position);
                    fresh.category = *directive.category;
                    fresh.function = directive.function.value_or("");
                    fresh.domain = fresh.position;
                    new_spans.push_back(std::move(fresh));
                }
            }
            break;
        }
        case VariationDirective::Kind::addition: {
            if (directive.insert_index < 0 || directive.insert_index > n) {
                throw GenvarError("addition index " + std::to_string(directive.insert_index) +
                                  " is out of bounds for " + std::to_string(n) + " tokens");
            }
            if (directive.tokens.empty()) {
                throw GenvarError("addition needs at least one token");
            }
            int64_t at = directive.insert_index;
            int64_t added = static_cast<int64_t>(directive.tokens.size());
            new_tokens.assign(tokens.begin(), tokens.begin() + at);
            new_tokens.insert(new_tokens.end(), directive.tokens.begin(), directive.tokens.end());
            new_tokens.insert(new_tokens.end(), tokens.begin() + at, tokens.end());

            // position spans containing the insertion point are dropped;
            // domains extend over the inserted tokens instead
            SpanRewriter rewriter{
                [&](int64_t x) { return std::optional<int64_t>(x >= at ? x + added : x); },
                [&](int64_t y) { return std::optional<int64_t>(y > at ? y + added : y); },
                [&](const TokenSpan& position) {
                    return !(position.start < at && at < position.end);
                }};
            new_spans = rewriter.rewrite(spans, new_tokens);
            if (directive.category) {
                AnalysisSpan fresh;
                fresh.item_id = source.id;
                fresh.position = {at, at + added};
                fresh.instance = slice_tokens(new_tokens, fresh.position);
                fresh.category = *directive.category;
                fresh.function = directive.function.value_or("");
                fresh.domain = fresh.position;
                new_spans.push_back(std::move(fresh));
            }
            break;
        }
        case VariationDirective::Kind::deletion: {
            require_in_bounds(directive.target, n, "deletion span");
            const TokenSpan& target = directive.target;
            if (target.end - target.start == n) {
                throw GenvarError("deletion would remove every token");
            }
            int64_t removed = target.end - target.start;
            new_tokens.assign(tokens.begin(), tokens.begin() + target.start);
            new_tokens.insert(new_tokens.end(), tokens.begin() + target.end, tokens.end());

            auto remap = [&](int64_t x) -> std::optional<int64_t> {
                if (x <= target.start) return x;
                if (x >= target.end) return x - removed;
                return std::nullopt;
            };
            SpanRewriter rewriter{
                remap, remap,
                [&](const TokenSpan& position) { return !spans_intersect(position, target); }};
            new_spans = rewriter.rewrite(spans, new_tokens);
            break;
        }
        case VariationDirective::Kind::permutation: {
            TokenSpan first = directive.target;
            TokenSpan second = directive.second;
            require_in_bounds(first, n, "permutation span");
            require_in_bounds(second, n, "permutation span");
            if (spans_intersect(first, second)) {
                throw GenvarError("permutation spans " + render_span(first) + " and " +
                                  render_span(second) + " overlap");
            }
            if (second.start < first.start) std::swap(first, second);

            new_tokens.assign(tokens.begin(), tokens.begin() + first.start);
            new_tokens.insert(new_tokens.end(), tokens.begin() + second.start,
                              tokens.begin() + second.end);
            new_tokens.insert(new_tokens.end(), tokens.begin() + first.end,
                              tokens.begin() + second.start);
            new_tokens.insert(new_tokens.end(), tokens.begin() + first.start,
                              tokens.begin() + first.end);
            new_tokens.insert(new_tokens.end(), tokens.begin() + second.end, tokens.end());

            // zones: prefix | first | middle | second | suffix; a span or
            // domain must sit entirely inside one zone to survive
            int64_t delta_first = second.end - first.end;
            int64_t delta_middle = (second.end - second.start) - (first.end - first.start);
            int64_t delta_second = first.start - second.start;
            auto zone_delta = [&](const TokenSpan& span) -> std::optional<int64_t> {
                if (span.end <= first.start) return 0;
                if (span.start >= first.start && span.end <= first.end) return delta_first;
                if (span.start >= first.end && span.end <= second.start) return delta_middle;
                if (span.start >= second.start && span.end <= second.end) return delta_second;
                if (span.start >= second.end) return 0;
                return std::nullopt;
            };
            std::vector<AnalysisSpan> survivors;
            for (const auto& span : spans) {
                auto position_delta = zone_delta(span.position);
                auto domain_delta = zone_delta(span.domain);
                if (!position_delta || !domain_delta) continue;
                AnalysisSpan moved = span;
                moved.position = {span.position.start + *position_delta,
                                  span.position.end + *position_delta};
                moved.domain = {span.domain.start + *domain_delta,
                                span.domain.end + *domain_delta};
                moved.instance = slice_tokens(new_tokens, moved.position);
                survivors.push_back(std::move(moved));
            }
            new_spans = std::move(survivors);
            break;
        }
    }

    DerivedItem out;
    out.item = source;
    out.item.id = 0;
    out.item.wellformedness = 0;
    out.item.input = join_tokens(new_tokens);
    out.item.length = computed_length(out.item.input);
    if (out.item.length < 1) {
        throw GenvarError("the variation leaves no non-punctuation token");
    }
    out.item.comment = "derived:" + std::to_string(source.id) + ":" +
                       variation_kind_name(directive.kind);
    out.spans = std::move(new_spans);
    for (auto& span : out.spans) span.item_id = 0;
    out.provenance.source_item_id = source.id;
    out.provenance.directive = directive;
    return out;
}

MakeSetResult make_test_set(Database& db, int64_t base_item_id,
                            const std::vector<VariationDirective>& directives) {
    if (directives.empty()) {
        throw GenvarError("a test set needs at least one directive; "
                          "a single-member set is not allowed");
    }
    auto base = find_item(db, base_item_id);
    if (!base) {
        throw GenvarError("item " + std::to_string(base_item_id) + " does not exist");
    }
    std::vector<AnalysisSpan> base_spans = spans_of_item(db, base_item_id);

    // collect the base's links and their parameters before staging
    struct LinkCopy {
        int64_t phenomenon_id;
        std::vector<Record> parameters;
    };
    std::vector<LinkCopy> links;
    for (const auto& record : db.records("item-phenomenon")) {
        if (std::get<int64_t>(record[1]) != base_item_id) continue;
        LinkCopy copy;
        copy.phenomenon_id = std::get<int64_t>(record[2]);
        int64_t link_id = std::get<int64_t>(record[0]);
        for (const auto& parameter : db.records("parameter")) {
            if (std::get<int64_t>(parameter[0]) == link_id) copy.parameters.push_back(parameter);
        }
        links.push_back(std::move(copy));
    }

    Database staged = db;
    MakeSetResult result;
    for (const auto& directive : directives) {
        DerivedItem derived = apply_variation(*base, base_spans, directive);
        int64_t item_id =
            insert_record(staged, "item", pad_to_arity(staged, "item", item_to_record(derived.item)));
        result.derived_item_ids.push_back(item_id);
        for (auto span : derived.spans) {
            span.item_id = item_id;
            insert_record(staged, "analysis",
                          pad_to_arity(staged, "analysis", span_to_record(span)));
        }
        for (const auto& link : links) {
            int64_t link_id = insert_record(
                staged, "item-phenomenon",
                pad_to_arity(staged, "item-phenomenon",
                             Record{int64_t{0}, item_id, link.phenomenon_id}));
            for (Record parameter : link.parameters) {
                parameter[0] = link_id;
                insert_record(staged, "parameter", std::move(parameter));
            }
        }
    }

    int64_t set_id = 0;
    for (const auto& record : staged.records("set")) {
        set_id = std::max(set_id, std::get<int64_t>(record[0]));
    }
    ++set_id;
    insert_record(staged, "set", pad_to_arity(staged, "set", Record{set_id, base_item_id}));
    for (int64_t derived_id : result.derived_item_ids) {
        insert_record(staged, "set", pad_to_arity(staged, "set", Record{set_id, derived_id}));
    }
    result.set_id = set_id;
    db = std::move(staged);
    return result;
}

namespace {

TokenSpan parse_directive_span(const std::string& field, int line_no) {
    try {
        return std::get<TokenSpan>(parse_value(field, AttrType::position));
    } catch (const StorageError&) {
        throw GenvarError("directive line " + std::to_string(line_no) + ": \"" + field +
                          "\" is not a start:end span");
    }
}

}  // namespace

std::vector<VariationDirective> parse_directives(std::istream& in) {
    std::vector<VariationDirective> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        std::string diagnostic;
        auto fields = split_record_line(line, &diagnostic);
        if (!fields) {
            throw GenvarError("directive line " + std::to_string(line_no) + ": " + diagnostic);
        }
        const auto& f = *fields;
        VariationDirective directive;
        if (f[0] == "replacement") {
            if (f.size() < 3 || f.size() > 5) {
                throw GenvarError("directive line " + std::to_string(line_no) +
                                  ": replacement takes a span, tokens, and optional "
                                  "category/function");
            }
            directive.kind = VariationDirective::Kind::replacement;
            directive.target = parse_directive_span(f[1], line_no);
            directive.tokens = split_tokens(f[2]);
            if (f.size() >= 4 && !f[3].empty()) directive.category = f[3];
            if (f.size() == 5 && !f[4].empty()) directive.function = f[4];
        } else if (f[0] == "addition") {
            if (f.size() != 5) {
                throw GenvarError("directive line " + std::to_string(line_no) +
                                  ": addition takes an index, tokens, category, and function");
            }
            directive.kind = VariationDirective::Kind::addition;
            auto index = parse_int(f[1]);
            if (!index) {
                throw GenvarError("directive line " + std::to_string(line_no) + ": \"" + f[1] +
                                  "\" is not an index");
            }
            directive.insert_index = *index;
            directive.tokens = split_tokens(f[2]);
            if (!f[3].empty()) directive.category = f[3];
            if (!f[4].empty()) directive.function = f[4];
        } else if (f[0] == "deletion") {
            if (f.size() != 2) {
                throw GenvarError("directive line " + std::to_string(line_no) +
                                  ": deletion takes a span");
            }
            directive.kind = VariationDirective::Kind::deletion;
            directive.target = parse_directive_span(f[1], line_no);
        } else if (f[0] == "permutation") {
            if (f.size() != 3) {
                throw GenvarError("directive line " + std::to_string(line_no) +
                                  ": permutation takes two spans");
            }
            directive.kind = VariationDirective::Kind::permutation;
            directive.target = parse_directive_span(f[1], line_no);
            directive.second = parse_directive_span(f[2], line_no);
        } else {
            throw GenvarError("directive line " + std::to_string(line_no) +
                              ": unknown operation \"" + f[0] + "\"");
        }
        out.push_back(std::move(directive));
    }
    return out;
}

}  // namespace tsdb
