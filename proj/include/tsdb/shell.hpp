// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "tsdb/storage.hpp"

namespace tsdb {

struct ShellConfig {
    std::filesystem::path home;
    std::string language = "en";
    std::string format = "table";  // "table" or "delimited"
};

/// Interactive command loop: queries plus backslash meta-commands
/// (\relations, \describe, \language, \import, \export, \check, \insert,
/// \history, \quit), with line editing, completion, and history when run
/// on a terminal. Returns the process exit status.
int repl(const ShellConfig& config, std::istream& in, std::ostream& out, std::ostream& err);

/// One-shot query evaluation. Exit status 0 on success, 1 on a query
/// error, 2 on a database error. The delimited format renders projected
/// rows exactly as the storage record format does.
int run_once(const ShellConfig& config, const std::string& query_text, std::ostream& out,
             std::ostream& err);

}  // namespace tsdb
