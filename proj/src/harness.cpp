// SPDX-License-Identifier: Apache-2.0
#include "tsdb/harness.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <set>
#include <sstream>
#include <thread>

#include "tsdb/query.hpp"
#include "tsdb/text.hpp"

namespace tsdb {

std::optional<double> PhenomenonFigures::coverage() const {
    if (wellformed_total == 0) return std::nullopt;
    return static_cast<double>(wellformed_accepted) / static_cast<double>(wellformed_total);
}

std::optional<double> PhenomenonFigures::overgeneration() const {
    if (illformed_total == 0) return std::nullopt;
    return static_cast<double>(illformed_accepted) / static_cast<double>(illformed_total);
}

std::optional<double> PhenomenonFigures::unanalyzed_fraction() const {
    if (total == 0) return std::nullopt;
    return static_cast<double>(unanalyzed) / static_cast<double>(total);
}

namespace {

using Clock = std::chrono::steady_clock;

// One external adapter process wired up through pipes.
class AdapterProcess {
public:
    explicit AdapterProcess(const std::string& command) : command_(command) {}

    ~AdapterProcess() { terminate(); }

    bool spawn() {
        terminate();
        buffer_.clear();
        int to_child[2];
        int from_child[2];
        if (pipe(to_child) != 0) return false;
        if (pipe(from_child) != 0) {
            close(to_child[0]);
            close(to_child[1]);
            return false;
        }
        pid_ = fork();
        if (pid_ < 0) {
            close(to_child[0]);
            close(to_child[1]);
            close(from_child[0]);
            close(from_child[1]);
            return false;
        }
        if (pid_ == 0) {
            setpgid(0, 0);  // own group, so terminate() reaches grandchildren
            dup2(to_child[0], STDIN_FILENO);
            dup2(from_child[1], STDOUT_FILENO);
            close(to_child[0]);
            close(to_child[1]);
            close(from_child[0]);
            close(from_child[1]);
            execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
            _exit(127);
        }
        close(to_child[0]);
        close(from_child[1]);
        stdin_fd_ = to_child[1];
        stdout_fd_ = from_child[0];
        return true;
    }

    bool alive() const { return pid_ > 0; }

    bool send_line(const std::string& line) {
        if (!alive()) return false;
        std::string payload = line + "\n";
        size_t written = 0;
        while (written < payload.size()) {
            ssize_t n = write(stdin_fd_, payload.data() + written, payload.size() - written);
            if (n <= 0) return false;
            written += static_cast<size_t>(n);
        }
        return true;
    }

    // Reads one newline-terminated response before the deadline.
    enum class ReadStatus { ok, timeout, closed };
    ReadStatus read_line(Clock::time_point deadline, std::string& out) {
        while (true) {
            auto newline = buffer_.find('\n');
            if (newline != std::string::npos) {
                out = buffer_.substr(0, newline);
                buffer_.erase(0, newline + 1);
                if (!out.empty() && out.back() == '\r') out.pop_back();
                return ReadStatus::ok;
            }
            auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 deadline - Clock::now())
                                 .count();
            if (remaining <= 0) return ReadStatus::timeout;
            struct pollfd waiter{stdout_fd_, POLLIN, 0};
            int ready = poll(&waiter, 1, static_cast<int>(remaining));
            if (ready == 0) return ReadStatus::timeout;
            if (ready < 0) {
                if (errno == EINTR) continue;
                return ReadStatus::closed;
            }
            char chunk[512];
            ssize_t n = read(stdout_fd_, chunk, sizeof chunk);
            if (n <= 0) return ReadStatus::closed;
            buffer_.append(chunk, static_cast<size_t>(n));
        }
    }

    void terminate() {
        if (pid_ > 0) {
            kill(-pid_, SIGKILL);  // the whole adapter process group
            kill(pid_, SIGKILL);
            waitpid(pid_, nullptr, 0);
            pid_ = -1;
        }
        if (stdin_fd_ >= 0) close(stdin_fd_);
        if (stdout_fd_ >= 0) close(stdout_fd_);
        stdin_fd_ = -1;
        stdout_fd_ = -1;
    }

private:
    std::string command_;
    pid_t pid_ = -1;
    int stdin_fd_ = -1;
    int stdout_fd_ = -1;
    std::string buffer_;
};

// ACCEPT <readings> <time-ms> [output...] | REJECT <time-ms> [flags...]
bool parse_response(const std::string& line, ItemOutcome& outcome) {
    std::istringstream in(line);
    std::string verb;
    if (!(in >> verb)) return false;
    auto rest_of = [&](std::istream& stream) {
        std::string rest;
        std::getline(stream, rest);
        return trim(rest);
    };
    if (verb == "ACCEPT") {
        std::string readings_text, time_text;
        if (!(in >> readings_text >> time_text)) return false;
        auto readings = parse_int(readings_text);
        auto time_ms = parse_int(time_text);
        if (!readings || *readings < 0 || !time_ms || *time_ms < -1) return false;
        outcome.accepted = true;
        outcome.readings = *readings;
        outcome.time_ms = *time_ms;
        outcome.output = rest_of(in);
        return true;
    }
    if (verb == "REJECT") {
        std::string time_text;
        if (!(in >> time_text)) return false;
        auto time_ms = parse_int(time_text);
        if (!time_ms || *time_ms < -1) return false;
        outcome.accepted = false;
        outcome.readings = 0;
        outcome.time_ms = *time_ms;
        outcome.flags = rest_of(in);
        return true;
    }
    return false;
}

struct SelectedItem {
    int64_t id;
    int64_t wellformedness;
    std::string input;
    std::string expected_output;  // empty when no expected-output parameter
};

std::string error_flag(ItemOutcome::Error error) {
    switch (error) {
        case ItemOutcome::Error::timeout: return "timeout";
        case ItemOutcome::Error::crash: return "crash";
        case ItemOutcome::Error::protocol: return "protocol";
        case ItemOutcome::Error::none: return "";
    }
    return "";
}

void process_items(const AdapterSpec& adapter, const std::vector<SelectedItem>& items,
                   std::vector<ItemOutcome>& outcomes, std::atomic<size_t>& next,
                   std::atomic<bool>& any_response) {
    AdapterProcess process(adapter.command);
    while (true) {
        size_t index = next.fetch_add(1);
        if (index >= items.size()) break;
        const SelectedItem& item = items[index];
        ItemOutcome outcome;
        outcome.item_id = item.id;

        bool answered = false;
        for (int attempt = 0; attempt < 2 && !answered; ++attempt) {
            if (!process.alive() && !process.spawn()) {
                outcome.error = ItemOutcome::Error::crash;
                break;
            }
            if (!process.send_line(item.input)) {
                outcome.error = ItemOutcome::Error::crash;
                process.terminate();
                continue;  // one respawn attempt per item
            }
            auto deadline = Clock::now() + std::chrono::milliseconds(adapter.timeout_ms);
            std::string line;
            auto status = process.read_line(deadline, line);
            if (status == AdapterProcess::ReadStatus::timeout) {
                outcome.error = ItemOutcome::Error::timeout;
                process.terminate();
                break;
            }
            if (status == AdapterProcess::ReadStatus::closed) {
                outcome.error = ItemOutcome::Error::crash;
                process.terminate();
                continue;
            }
            any_response = true;
            if (!parse_response(line, outcome)) {
                outcome = ItemOutcome{};
                outcome.item_id = item.id;
                outcome.error = ItemOutcome::Error::protocol;
                outcome.output = line;
                break;
            }
            outcome.error = ItemOutcome::Error::none;
            answered = true;
        }

        if (!answered) {
            outcome.accepted = false;
            outcome.readings = 0;
            outcome.time_ms = -1;
            std::string flag = error_flag(outcome.error);
            outcome.flags = outcome.flags.empty() ? flag : outcome.flags + " " + flag;
        } else if (outcome.accepted && !item.expected_output.empty() &&
                   outcome.output != item.expected_output) {
            outcome.flags = outcome.flags.empty() ? "output-mismatch"
                                                  : outcome.flags + " output-mismatch";
        }
        outcomes[index] = std::move(outcome);
    }
}

}  // namespace

RunOutcome run_cycle(Database& db, const std::string& selection, const AdapterSpec& adapter,
                     const Run& metadata) {
    if (adapter.timeout_ms <= 0) throw HarnessError("timeout must be positive");
    if (adapter.parallelism < 1) throw HarnessError("parallelism must be at least 1");

    // accept either a full query or a bare condition
    std::string query_text = selection.empty() ? "select i-id"
                             : selection.starts_with("select") ? selection
                                                               : "select i-id where " + selection;
    QueryAst ast;
    try {
        ast = parse_query(query_text, db.schema());
    } catch (const QueryError& e) {
        throw HarnessError("selection query: " + std::string(e.what()));
    }
    QueryAst id_query;
    id_query.projection = {"i-id"};
    id_query.condition = clone_condition(ast.condition.get());
    ResultTable table = evaluate_query(id_query, plan_query(id_query, db.schema()), db);
    if (table.rows.empty()) throw HarnessError("the selection query matches no items");

    std::set<int64_t> selected_ids;
    for (const auto& row : table.rows) selected_ids.insert(std::get<int64_t>(row[0]));

    // expected-output parameters attach to the item's phenomenon links
    std::map<int64_t, std::string> expected_by_item;
    {
        std::map<int64_t, int64_t> item_by_link;
        for (const auto& record : db.records("item-phenomenon")) {
            item_by_link[std::get<int64_t>(record[0])] = std::get<int64_t>(record[1]);
        }
        for (const auto& record : db.records("parameter")) {
            if (std::get<std::string>(record[1]) != "expected-output") continue;
            auto it = item_by_link.find(std::get<int64_t>(record[0]));
            if (it == item_by_link.end()) continue;
            expected_by_item[it->second] = std::get<std::string>(record[2]);
        }
    }

    std::vector<SelectedItem> items;
    for (const auto& record : db.records("item")) {
        int64_t id = std::get<int64_t>(record[0]);
        if (!selected_ids.contains(id)) continue;
        SelectedItem item;
        item.id = id;
        item.wellformedness = std::get<int64_t>(record[7]);
        item.input = std::get<std::string>(record[9]);
        auto expected = expected_by_item.find(id);
        if (expected != expected_by_item.end()) item.expected_output = expected->second;
        items.push_back(std::move(item));
    }
    std::sort(items.begin(), items.end(),
              [](const SelectedItem& a, const SelectedItem& b) { return a.id < b.id; });

    // a dead pipe must not kill the process
    signal(SIGPIPE, SIG_IGN);

    std::vector<ItemOutcome> outcomes(items.size());
    std::atomic<size_t> next{0};
    std::atomic<bool> any_response{false};
    size_t worker_count = std::min(static_cast<size_t>(adapter.parallelism), items.size());
    if (worker_count <= 1) {
        process_items(adapter, items, outcomes, next, any_response);
    } else {
        std::vector<std::thread> workers;
        workers.reserve(worker_count);
        for (size_t i = 0; i < worker_count; ++i) {
            workers.emplace_back(process_items, std::cref(adapter), std::cref(items),
                                 std::ref(outcomes), std::ref(next), std::ref(any_response));
        }
        for (auto& worker : workers) worker.join();
    }

    if (!any_response) {
        bool all_crashed = std::all_of(outcomes.begin(), outcomes.end(), [](const ItemOutcome& o) {
            return o.error == ItemOutcome::Error::crash;
        });
        if (all_crashed) {
            throw HarnessError("adapter \"" + adapter.command +
                               "\" produced no response; nothing was stored");
        }
    }

    Run run = metadata;
    run.id = 0;
    int64_t run_id = insert_record(db, "run", pad_to_arity(db, "run", run_to_record(run)));
    for (const auto& outcome : outcomes) {
        ResultRow row;
        row.run_id = run_id;
        row.item_id = outcome.item_id;
        row.accepted = outcome.accepted ? 1 : 0;
        row.readings = outcome.readings;
        row.time_ms = outcome.time_ms;
        row.output = outcome.output;
        row.flags = outcome.flags;
        insert_record(db, "result", pad_to_arity(db, "result", result_to_record(row)));
    }

    // per-item figures, overall and per linked phenomenon
    std::map<int64_t, std::vector<std::string>> phenomena_of_item;
    {
        std::map<int64_t, std::string> name_by_id;
        for (const auto& record : db.records("phenomenon")) {
            name_by_id[std::get<int64_t>(record[0])] = std::get<std::string>(record[1]);
        }
        for (const auto& record : db.records("item-phenomenon")) {
            auto name = name_by_id.find(std::get<int64_t>(record[2]));
            if (name == name_by_id.end()) continue;
            phenomena_of_item[std::get<int64_t>(record[1])].push_back(name->second);
        }
    }

    RunOutcome result;
    result.run_id = run_id;
    result.report.run_id = run_id;
    auto tally = [](PhenomenonFigures& figures, const SelectedItem& item,
                    const ItemOutcome& outcome) {
        ++figures.total;
        bool unanalyzed = (" " + outcome.flags + " ").find(" unanalyzed ") != std::string::npos;
        if (unanalyzed) ++figures.unanalyzed;
        if (item.wellformedness == 1) {
            ++figures.wellformed_total;
            if (outcome.accepted) ++figures.wellformed_accepted;
        } else if (item.wellformedness == 0) {
            ++figures.illformed_total;
            if (outcome.accepted) ++figures.illformed_accepted;
        }
    };
    for (size_t i = 0; i < items.size(); ++i) {
        tally(result.report.totals, items[i], outcomes[i]);
        auto linked = phenomena_of_item.find(items[i].id);
        if (linked == phenomena_of_item.end()) continue;
        for (const auto& name : linked->second) {
            tally(result.report.by_phenomenon[name], items[i], outcomes[i]);
        }
    }
    result.outcomes = std::move(outcomes);
    return result;
}

RunDiff diff_runs(const Database& db, int64_t run_a, int64_t run_b) {
    auto run_exists = [&](int64_t id) {
        for (const auto& record : db.records("run")) {
            if (std::get<int64_t>(record[0]) == id) return true;
        }
        return false;
    };
    if (!run_exists(run_a)) throw HarnessError("unknown run " + std::to_string(run_a));
    if (!run_exists(run_b)) throw HarnessError("unknown run " + std::to_string(run_b));

    struct Outcome {
        bool accepted;
        int64_t time_ms;
    };
    std::map<int64_t, Outcome> a, b;
    for (const auto& record : db.records("result")) {
        ResultRow row = record_to_result(record);
        if (row.run_id == run_a) a[row.item_id] = {row.accepted == 1, row.time_ms};
        if (row.run_id == run_b) b[row.item_id] = {row.accepted == 1, row.time_ms};
    }

    std::map<int64_t, int64_t> wf_by_item;
    for (const auto& record : db.records("item")) {
        wf_by_item[std::get<int64_t>(record[0])] = std::get<int64_t>(record[7]);
    }

    RunDiff diff;
    int64_t measured_pairs = 0;
    double delta_sum = 0;
    for (const auto& [item_id, outcome_a] : a) {
        auto in_b = b.find(item_id);
        if (in_b == b.end()) continue;
        const Outcome& outcome_b = in_b->second;
        auto wf = wf_by_item.find(item_id);
        if (wf == wf_by_item.end()) continue;
        if (wf->second == 1) {
            if (!outcome_a.accepted && outcome_b.accepted) {
                diff.newly_accepted_wellformed.push_back(item_id);
            } else if (outcome_a.accepted && !outcome_b.accepted) {
                diff.newly_rejected_wellformed.push_back(item_id);
            }
        } else if (wf->second == 0) {
            if (outcome_a.accepted && !outcome_b.accepted) {
                diff.newly_rejected_illformed.push_back(item_id);
            } else if (!outcome_a.accepted && outcome_b.accepted) {
                diff.newly_accepted_illformed.push_back(item_id);
            }
        }
        if (outcome_a.time_ms >= 0 && outcome_b.time_ms >= 0) {
            ++measured_pairs;
            delta_sum += static_cast<double>(outcome_b.time_ms - outcome_a.time_ms);
        }
    }
    if (measured_pairs > 0) diff.mean_time_delta_ms = delta_sum / measured_pairs;
    return diff;
}

namespace {

std::string percent_or_na(const std::optional<double>& fraction) {
    if (!fraction) return "n/a";
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.1f%%", *fraction * 100.0);
    return buffer;
}

}  // namespace

std::string report_render(const RunReport& report) {
    std::ostringstream out;
    const PhenomenonFigures& t = report.totals;
    out << "run " << report.run_id << "\n";
    out << "items          " << t.total << "\n";
    out << "well-formed    " << t.wellformed_total << "  accepted " << t.wellformed_accepted
        << "  coverage " << percent_or_na(t.coverage()) << "\n";
    out << "ill-formed     " << t.illformed_total << "  accepted " << t.illformed_accepted
        << "  overgeneration " << percent_or_na(t.overgeneration()) << "\n";
    out << "unanalyzed     " << t.unanalyzed << "  fraction "
        << percent_or_na(t.unanalyzed_fraction()) << "\n";
    if (report.by_phenomenon.empty()) return out.str();

    out << "\n";
    size_t width = std::string("phenomenon").size();
    for (const auto& [name, figures] : report.by_phenomenon) {
        width = std::max(width, name.size());
    }
    auto pad = [](const std::string& text, size_t column_width) {
        return text + std::string(column_width - text.size() + 2, ' ');
    };
    const std::vector<std::string> headers = {"well-formed", "coverage", "ill-formed",
                                              "overgeneration"};
    out << pad("phenomenon", width);
    for (const auto& header : headers) out << pad(header, header.size());
    out << "unanalyzed\n";
    for (const auto& [name, figures] : report.by_phenomenon) {
        std::vector<std::string> cells = {
            std::to_string(figures.wellformed_accepted) + "/" +
                std::to_string(figures.wellformed_total),
            percent_or_na(figures.coverage()),
            std::to_string(figures.illformed_accepted) + "/" +
                std::to_string(figures.illformed_total),
            percent_or_na(figures.overgeneration())};
        out << pad(name, width);
        for (size_t i = 0; i < cells.size(); ++i) out << pad(cells[i], headers[i].size());
        out << percent_or_na(figures.unanalyzed_fraction()) << "\n";
    }
    return out.str();
}

std::string diff_render(const RunDiff& diff, int64_t run_a, int64_t run_b) {
    std::ostringstream out;
    out << "diff of runs " << run_a << " -> " << run_b << "\n";
    auto list = [&](const char* label, const std::vector<int64_t>& ids) {
        out << label << "(" << ids.size() << ")";
        for (int64_t id : ids) out << " " << id;
        out << "\n";
    };
    list("newly accepted well-formed (progress)   ", diff.newly_accepted_wellformed);
    list("newly rejected well-formed (regression) ", diff.newly_rejected_wellformed);
    list("newly rejected ill-formed (progress)    ", diff.newly_rejected_illformed);
    list("newly accepted ill-formed (regression)  ", diff.newly_accepted_illformed);
    if (diff.mean_time_delta_ms) {
        char buffer[48];
        std::snprintf(buffer, sizeof buffer, "%+.1f", *diff.mean_time_delta_ms);
        out << "mean time delta " << buffer << " ms\n";
    } else {
        out << "mean time delta undefined (no overlapping measured items)\n";
    }
    return out.str();
}

}  // namespace tsdb
