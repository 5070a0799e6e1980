// SPDX-License-Identifier: Apache-2.0
#include "tsdb/lineedit.hpp"

#include <termios.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>

namespace tsdb {

namespace {

bool is_utf8_continuation(unsigned char byte) { return (byte & 0xC0) == 0x80; }

size_t display_width(const std::string& text) {
    size_t width = 0;
    for (unsigned char c : text) {
        if (!is_utf8_continuation(c)) ++width;
    }
    return width;
}

size_t previous_char(const std::string& buffer, size_t pos) {
    if (pos == 0) return 0;
    --pos;
    while (pos > 0 && is_utf8_continuation(static_cast<unsigned char>(buffer[pos]))) --pos;
    return pos;
}

size_t next_char(const std::string& buffer, size_t pos) {
    if (pos >= buffer.size()) return buffer.size();
    ++pos;
    while (pos < buffer.size() && is_utf8_continuation(static_cast<unsigned char>(buffer[pos]))) {
        ++pos;
    }
    return pos;
}

// RAII raw mode
class RawMode {
public:
    RawMode() {
        if (tcgetattr(STDIN_FILENO, &saved_) != 0) return;
        termios raw = saved_;
        raw.c_iflag &= ~(BRKINT | ICRNL | INPCK | ISTRIP | IXON);
        raw.c_lflag &= ~(ECHO | ICANON | IEXTEN);
        raw.c_cc[VMIN] = 1;
        raw.c_cc[VTIME] = 0;
        // TCSADRAIN keeps type-ahead typed while a command was running
        engaged_ = tcsetattr(STDIN_FILENO, TCSADRAIN, &raw) == 0;
    }
    ~RawMode() {
        if (engaged_) tcsetattr(STDIN_FILENO, TCSADRAIN, &saved_);
    }
    bool engaged() const { return engaged_; }

private:
    termios saved_{};
    bool engaged_ = false;
};

void write_stdout(const std::string& text) {
    ssize_t ignored = write(STDOUT_FILENO, text.data(), text.size());
    (void)ignored;
}

}  // namespace

LineEditor::LineEditor(std::istream& in, std::ostream& out, CompletionFn completion)
    : in_(in), out_(out), completion_(std::move(completion)) {
    interactive_ = &in == &std::cin && isatty(STDIN_FILENO) && isatty(STDOUT_FILENO);
}

void LineEditor::set_history_file(const std::filesystem::path& path) {
    history_file_ = path;
    std::ifstream file(path);
    std::string line;
    while (std::getline(file, line)) {
        if (!line.empty()) history_.push_back(line);
    }
}

void LineEditor::save_history() const {
    if (history_file_.empty()) return;
    std::ofstream file(history_file_);
    size_t start = history_.size() > kHistoryLimit ? history_.size() - kHistoryLimit : 0;
    for (size_t i = start; i < history_.size(); ++i) file << history_[i] << '\n';
}

void LineEditor::add_history(const std::string& line) {
    if (line.empty()) return;
    if (!history_.empty() && history_.back() == line) return;
    history_.push_back(line);
}

std::optional<std::string> LineEditor::read_line(const std::string& prompt) {
    if (!interactive_) {
        std::string line;
        if (!std::getline(in_, line)) return std::nullopt;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
    }
    return read_line_raw(prompt);
}

std::optional<std::string> LineEditor::read_line_raw(const std::string& prompt) {
    RawMode raw;
    if (!raw.engaged()) {
        // a terminal we cannot switch; degrade to plain reads
        write_stdout(prompt);
        std::string line;
        if (!std::getline(in_, line)) return std::nullopt;
        return line;
    }

    std::string buffer;
    size_t cursor = 0;
    size_t history_cursor = history_.size();
    std::string stash;  // the line being edited before history recall

    auto redraw = [&] {
        std::string sequence = "\r\x1b[K" + prompt + buffer;
        size_t tail = display_width(buffer.substr(cursor));
        if (tail > 0) sequence += "\x1b[" + std::to_string(tail) + "D";
        write_stdout(sequence);
    };
    redraw();

    auto read_byte = [&]() -> int {
        unsigned char byte;
        ssize_t n = read(STDIN_FILENO, &byte, 1);
        return n == 1 ? byte : -1;
    };

    while (true) {
        int key = read_byte();
        if (key < 0) return std::nullopt;
        switch (key) {
            case '\r':
            case '\n':
                write_stdout("\r\n");
                return buffer;
            case 4:  // ctrl-d
                if (buffer.empty()) {
                    write_stdout("\r\n");
                    return std::nullopt;
                }
                buffer.erase(cursor, next_char(buffer, cursor) - cursor);
                break;
            case 3:  // ctrl-c: drop the line
                buffer.clear();
                cursor = 0;
                write_stdout("^C\r\n");
                break;
            case 127:
            case 8: {  // backspace
                if (cursor > 0) {
                    size_t previous = previous_char(buffer, cursor);
                    buffer.erase(previous, cursor - previous);
                    cursor = previous;
                }
                break;
            }
            case 1: cursor = 0; break;              // ctrl-a
            case 5: cursor = buffer.size(); break;  // ctrl-e
            case 11: buffer.erase(cursor); break;   // ctrl-k
            case 21:                                 // ctrl-u
                buffer.erase(0, cursor);
                cursor = 0;
                break;
            case 23: {  // ctrl-w: delete the word before the cursor
                size_t end = cursor;
                size_t start = end;
                while (start > 0 && buffer[start - 1] == ' ') --start;
                while (start > 0 && buffer[start - 1] != ' ') --start;
                buffer.erase(start, end - start);
                cursor = start;
                break;
            }
            case 12:  // ctrl-l: clear screen
                write_stdout("\x1b[2J\x1b[H");
                break;
            case '\t': {
                if (!completion_) break;
                size_t word_start = buffer.find_last_of(' ', cursor == 0 ? 0 : cursor - 1);
                word_start = word_start == std::string::npos ? 0 : word_start + 1;
                std::string word = buffer.substr(word_start, cursor - word_start);
                auto candidates = completion_(word);
                if (candidates.empty()) break;
                if (candidates.size() == 1) {
                    std::string replacement = candidates[0] + " ";
                    buffer.replace(word_start, cursor - word_start, replacement);
                    cursor = word_start + replacement.size();
                    break;
                }
                // extend to the longest common prefix, then list
                std::string common = candidates[0];
                for (const auto& candidate : candidates) {
                    size_t i = 0;
                    while (i < common.size() && i < candidate.size() &&
                           common[i] == candidate[i]) {
                        ++i;
                    }
                    common.resize(i);
                }
                if (common.size() > word.size()) {
                    buffer.replace(word_start, cursor - word_start, common);
                    cursor = word_start + common.size();
                } else {
                    std::string listing = "\r\n";
                    for (const auto& candidate : candidates) listing += candidate + "  ";
                    listing += "\r\n";
                    write_stdout(listing);
                }
                break;
            }
            case 27: {  // escape sequences
                int second = read_byte();
                if (second != '[' && second != 'O') break;
                int third = read_byte();
                switch (third) {
                    case 'A':  // up
                        if (history_cursor > 0) {
                            if (history_cursor == history_.size()) stash = buffer;
                            --history_cursor;
                            buffer = history_[history_cursor];
                            cursor = buffer.size();
                        }
                        break;
                    case 'B':  // down
                        if (history_cursor < history_.size()) {
                            ++history_cursor;
                            buffer = history_cursor == history_.size()
                                         ? stash
                                         : history_[history_cursor];
                            cursor = buffer.size();
                        }
                        break;
                    case 'C': cursor = next_char(buffer, cursor); break;
                    case 'D': cursor = previous_char(buffer, cursor); break;
                    case 'H': cursor = 0; break;
                    case 'F': cursor = buffer.size(); break;
                    case '1':
                    case '4':
                    case '3': {
                        int tilde = read_byte();
                        if (tilde != '~') break;
                        if (third == '1') cursor = 0;
                        if (third == '4') cursor = buffer.size();
                        if (third == '3' && cursor < buffer.size()) {
                            buffer.erase(cursor, next_char(buffer, cursor) - cursor);
                        }
                        break;
                    }
                    default: break;
                }
                break;
            }
            default:
                if (key >= 32) {  // printable and UTF-8 continuation bytes
                    buffer.insert(cursor, 1, static_cast<char>(key));
                    ++cursor;
                }
                break;
        }
        redraw();
    }
}

}  // namespace tsdb
