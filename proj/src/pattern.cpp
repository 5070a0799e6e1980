// SPDX-License-Identifier: Apache-2.0
#include "tsdb/pattern.hpp"

#include <algorithm>
#include <functional>
#include <vector>

namespace tsdb {

namespace {

enum class AtomKind { literal, any, char_class, group, anchor_start, anchor_end };

struct CharRange {
    unsigned char low;
    unsigned char high;
};

}  // namespace

struct Pattern::Node {
    // alternation of sequences; each sequence element is an atom with a
    // repetition range (min 0/1, unbounded max for * and +)
    struct Atom {
        AtomKind kind = AtomKind::literal;
        char literal = 0;
        bool negated = false;
        std::vector<CharRange> ranges;
        std::unique_ptr<Node> group;
        int min_repeat = 1;
        bool unbounded = false;
    };
    using Sequence = std::vector<Atom>;
    std::vector<Sequence> alternatives;
};

namespace {

class Parser {
public:
    explicit Parser(std::string_view source) : source_(source) {}

    std::unique_ptr<Pattern::Node> parse() {
        auto node = parse_alternation();
        if (pos_ != source_.size()) {
            fail("unexpected \")\"");
        }
        return node;
    }

private:
    using Node = Pattern::Node;
    using Atom = Pattern::Node::Atom;

    [[noreturn]] void fail(const std::string& message) const {
        throw PatternError("pattern error at offset " + std::to_string(pos_) + ": " + message,
                           pos_);
    }

    bool done() const { return pos_ >= source_.size(); }
    char peek() const { return source_[pos_]; }

    std::unique_ptr<Node> parse_alternation() {
        auto node = std::make_unique<Node>();
        node->alternatives.push_back(parse_sequence());
        while (!done() && peek() == '|') {
            ++pos_;
            node->alternatives.push_back(parse_sequence());
        }
        return node;
    }

    Node::Sequence parse_sequence() {
        Node::Sequence sequence;
        while (!done() && peek() != '|' && peek() != ')') {
            sequence.push_back(parse_repeated_atom());
        }
        return sequence;
    }

    Atom parse_repeated_atom() {
        Atom atom = parse_atom();
        if (!done() && (peek() == '*' || peek() == '+' || peek() == '?')) {
            if (atom.kind == AtomKind::anchor_start || atom.kind == AtomKind::anchor_end) {
                fail("quantifier cannot follow an anchor");
            }
            char q = source_[pos_++];
            if (q == '*') {
                atom.min_repeat = 0;
                atom.unbounded = true;
            } else if (q == '+') {
                atom.min_repeat = 1;
                atom.unbounded = true;
            } else {
                atom.min_repeat = 0;
            }
        }
        return atom;
    }

    Atom parse_atom() {
        Atom atom;
        char c = peek();
        switch (c) {
            case '*':
            case '+':
            case '?':
                fail("quantifier with nothing to repeat");
            case '^':
                ++pos_;
                atom.kind = AtomKind::anchor_start;
                return atom;
            case '$':
                ++pos_;
                atom.kind = AtomKind::anchor_end;
                return atom;
            case '.':
                ++pos_;
                atom.kind = AtomKind::any;
                return atom;
            case '(': {
                ++pos_;
                atom.kind = AtomKind::group;
                atom.group = parse_alternation();
                if (done() || peek() != ')') fail("unterminated group");
                ++pos_;
                return atom;
            }
            case '[':
                return parse_class();
            case '\\': {
                ++pos_;
                if (done()) fail("dangling backslash");
                atom.kind = AtomKind::literal;
                atom.literal = source_[pos_++];
                return atom;
            }
            default:
                ++pos_;
                atom.kind = AtomKind::literal;
                atom.literal = c;
                return atom;
        }
    }

    Atom parse_class() {
        Atom atom;
        atom.kind = AtomKind::char_class;
        ++pos_;  // consume [
        if (!done() && peek() == '^') {
            atom.negated = true;
            ++pos_;
        }
        bool first = true;
        while (true) {
            if (done()) fail("unterminated character class");
            char c = peek();
            if (c == ']' && !first) {
                ++pos_;
                break;
            }
            first = false;
            unsigned char low;
            if (c == '\\') {
                ++pos_;
                if (done()) fail("dangling backslash in character class");
                low = static_cast<unsigned char>(source_[pos_++]);
            } else {
                low = static_cast<unsigned char>(source_[pos_++]);
            }
            unsigned char high = low;
            if (!done() && peek() == '-' && pos_ + 1 < source_.size() &&
                source_[pos_ + 1] != ']') {
                ++pos_;  // consume -
                char h = source_[pos_++];
                if (h == '\\') {
                    if (done()) fail("dangling backslash in character class");
                    h = source_[pos_++];
                }
                high = static_cast<unsigned char>(h);
                if (high < low) fail("inverted range in character class");
            }
            atom.ranges.push_back({low, high});
        }
        return atom;
    }

    std::string_view source_;
    size_t pos_ = 0;
};

using Continuation = std::function<bool(size_t)>;

bool match_node(const Pattern::Node& node, std::string_view text, size_t pos,
                const Continuation& k);

bool match_atom_once(const Pattern::Node::Atom& atom, std::string_view text, size_t pos,
                     const Continuation& k) {
    switch (atom.kind) {
        case AtomKind::anchor_start:
            return pos == 0 && k(pos);
        case AtomKind::anchor_end:
            return pos == text.size() && k(pos);
        case AtomKind::any:
            return pos < text.size() && k(pos + 1);
        case AtomKind::literal:
            return pos < text.size() && text[pos] == atom.literal && k(pos + 1);
        case AtomKind::char_class: {
            if (pos >= text.size()) return false;
            unsigned char c = static_cast<unsigned char>(text[pos]);
            bool inside = false;
            for (const auto& range : atom.ranges) {
                if (c >= range.low && c <= range.high) {
                    inside = true;
                    break;
                }
            }
            return inside != atom.negated && k(pos + 1);
        }
        case AtomKind::group:
            return match_node(*atom.group, text, pos, k);
    }
    return false;
}

bool match_repeat(const Pattern::Node::Atom& atom, std::string_view text, size_t pos, int seen,
                  const Continuation& k) {
    // greedy: try one more occurrence first, then fall back
    bool may_stop = seen >= atom.min_repeat;
    bool may_continue = atom.unbounded || seen < std::max(atom.min_repeat, 1);

    if (may_continue) {
        Continuation next = [&](size_t after) {
            if (after == pos && atom.unbounded) {
                // an empty-width match would loop forever; stop expanding
                return may_stop && k(after);
            }
            return match_repeat(atom, text, after, seen + 1, k);
        };
        if (match_atom_once(atom, text, pos, next)) return true;
    }
    return may_stop && k(pos);
}

bool match_sequence(const Pattern::Node::Sequence& sequence, size_t index, std::string_view text,
                    size_t pos, const Continuation& k) {
    if (index == sequence.size()) return k(pos);
    const auto& atom = sequence[index];
    Continuation rest = [&](size_t after) {
        return match_sequence(sequence, index + 1, text, after, k);
    };
    return match_repeat(atom, text, pos, 0, rest);
}

bool match_node(const Pattern::Node& node, std::string_view text, size_t pos,
                const Continuation& k) {
    for (const auto& alternative : node.alternatives) {
        if (match_sequence(alternative, 0, text, pos, k)) return true;
    }
    return false;
}

}  // namespace

Pattern::Pattern(std::string_view source) : source_(source) {
    Parser parser(source);
    root_ = parser.parse();
}

Pattern::Pattern(Pattern&&) noexcept = default;
Pattern& Pattern::operator=(Pattern&&) noexcept = default;
Pattern::~Pattern() = default;

bool Pattern::search(std::string_view text) const {
    Continuation accept = [](size_t) { return true; };
    for (size_t start = 0; start <= text.size(); ++start) {
        if (match_node(*root_, text, start, accept)) return true;
    }
    return false;
}

}  // namespace tsdb
