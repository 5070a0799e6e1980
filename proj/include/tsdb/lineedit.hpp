// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tsdb {

/// Minimal interactive line editor: insertion and deletion at a cursor,
/// arrow keys, home/end, kill keys, history recall, and prefix completion.
/// Raw terminal handling engages only when both stdin and stdout are
/// terminals; otherwise lines come straight off the input stream, which is
/// what batch and test callers rely on.
class LineEditor {
public:
    using CompletionFn = std::function<std::vector<std::string>(const std::string& prefix)>;

    LineEditor(std::istream& in, std::ostream& out, CompletionFn completion = {});

    bool interactive() const { return interactive_; }

    /// Returns the entered line, or nullopt at end of input.
    std::optional<std::string> read_line(const std::string& prompt);

    void add_history(const std::string& line);
    const std::vector<std::string>& history() const { return history_; }

    void set_history_file(const std::filesystem::path& path);  // loads existing entries
    void save_history() const;

private:
    std::optional<std::string> read_line_raw(const std::string& prompt);

    std::istream& in_;
    std::ostream& out_;
    CompletionFn completion_;
    bool interactive_ = false;
    std::vector<std::string> history_;
    std::filesystem::path history_file_;

    static constexpr size_t kHistoryLimit = 500;
};

}  // namespace tsdb
