// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tsdb/storage.hpp"

namespace tsdb {

class HarnessError : public Error {
public:
    using Error::Error;
};

/// How to talk to the application under test: a shell command whose
/// process reads one item input per line and answers one line —
///   ACCEPT <readings> <time-ms> [output...]
///   REJECT <time-ms> [flags...]
/// The process is reused across items and restarted after a crash.
struct AdapterSpec {
    std::string command;
    int timeout_ms = 10000;
    int parallelism = 1;
};

struct ItemOutcome {
    enum class Error { none, timeout, crash, protocol };

    int64_t item_id = 0;
    bool accepted = false;
    int64_t readings = 0;
    int64_t time_ms = -1;
    std::string output;
    std::string flags;
    Error error = Error::none;
};

struct PhenomenonFigures {
    int64_t total = 0;
    int64_t wellformed_total = 0;
    int64_t wellformed_accepted = 0;
    int64_t illformed_total = 0;
    int64_t illformed_accepted = 0;
    int64_t unanalyzed = 0;

    std::optional<double> coverage() const;        // accepted well-formed share
    std::optional<double> overgeneration() const;  // accepted ill-formed share
    std::optional<double> unanalyzed_fraction() const;
};

struct RunReport {
    int64_t run_id = 0;
    PhenomenonFigures totals;
    std::map<std::string, PhenomenonFigures> by_phenomenon;
};

struct RunOutcome {
    int64_t run_id = 0;
    RunReport report;
    std::vector<ItemOutcome> outcomes;  // in item-id order
};

/// Selects items with a query (full "select ..." text or a bare condition),
/// streams each input through the adapter, stores one Run plus one Result
/// per item, and computes the report. Launch failure aborts before any
/// insertion; per-item timeouts and crashes are recorded, not fatal.
RunOutcome run_cycle(Database& db, const std::string& selection, const AdapterSpec& adapter,
                     const Run& metadata);

struct RunDiff {
    std::vector<int64_t> newly_accepted_wellformed;  // progress
    std::vector<int64_t> newly_rejected_wellformed;  // regression
    std::vector<int64_t> newly_rejected_illformed;   // progress
    std::vector<int64_t> newly_accepted_illformed;   // regression
    std::optional<double> mean_time_delta_ms;        // absent without overlap
};

/// Compares two stored runs over the items they share.
RunDiff diff_runs(const Database& db, int64_t run_a, int64_t run_b);

std::string report_render(const RunReport& report);
std::string diff_render(const RunDiff& diff, int64_t run_a, int64_t run_b);

}  // namespace tsdb
