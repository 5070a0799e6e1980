// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tsdb/storage.hpp"

namespace tsdb {

class GenvarError : public Error {
public:
    using Error::Error;
};

/// One systematic variation deriving an ill-formed item from a well-formed
/// source: replace a span, add tokens, delete a span, or swap two spans.
struct VariationDirective {
    enum class Kind { replacement, addition, deletion, permutation };

    Kind kind = Kind::replacement;
    TokenSpan target;                      // replacement, deletion
    std::vector<std::string> tokens;       // replacement, addition
    std::optional<std::string> category;   // replacement override / addition span
    std::optional<std::string> function;   // replacement override / addition span
    int64_t insert_index = 0;              // addition
    TokenSpan second;                      // permutation: swapped with target

    friend bool operator==(const VariationDirective&, const VariationDirective&) = default;
};

std::string variation_kind_name(VariationDirective::Kind kind);

/// Where a derived item came from. The same information is written into
/// the derived item's comment as "derived:<source-id>:<kind>".
struct Provenance {
    int64_t derived_item_id = 0;
    int64_t source_item_id = 0;
    VariationDirective directive;
};

struct DerivedItem {
    TestItem item;  // id unassigned until inserted
    std::vector<AnalysisSpan> spans;
    Provenance provenance;
};

/// Applies one directive to a well-formed item. The derived item is
/// ill-formed, its length recomputed, and every surviving span's instance
/// re-derived from the new input. Spans that straddle an edited region
/// are dropped rather than guessed.
DerivedItem apply_variation(const TestItem& source, const std::vector<AnalysisSpan>& spans,
                            const VariationDirective& directive);

/// Applies each directive to the base item, inserts the derived items
/// with copies of the base's phenomenon links and parameters, and groups
/// base plus derived into a new test set. Atomic: any failure leaves the
/// database unchanged.
struct MakeSetResult {
    int64_t set_id = 0;
    std::vector<int64_t> derived_item_ids;
};

MakeSetResult make_test_set(Database& db, int64_t base_item_id,
                            const std::vector<VariationDirective>& directives);

/// Directive file: one directive per line, fields "@"-separated —
///   replacement@<start:end>@<tokens>[@<category>[@<function>]]
///   addition@<index>@<tokens>@<category>@<function>
///   deletion@<start:end>
///   permutation@<start:end>@<start:end>
/// Token fields use the storage escaping rules.
std::vector<VariationDirective> parse_directives(std::istream& in);

}  // namespace tsdb
