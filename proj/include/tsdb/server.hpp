// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tsdb/query.hpp"
#include "tsdb/storage.hpp"

namespace tsdb {

class NetError : public Error {
public:
    using Error::Error;
};

/// An ERR response from the server, surfaced with its code.
class RemoteError : public Error {
public:
    RemoteError(int code, const std::string& message)
        : Error("ERR " + std::to_string(code) + " " + message), code_(code) {}
    int code() const { return code_; }

private:
    int code_;
};

inline constexpr uint16_t kDefaultPort = 4242;

/// Read-only network access to one database snapshot over a line protocol:
///   QUERY <text>  ->  "OK <nrows>", nrows delimited rows, "."
///   RELATIONS     ->  "OK <n>", n relation names, "."
///   PING          ->  "PONG"
/// Anything else answers "ERR 400 ..."; query errors answer "ERR 422 ...".
/// Every request is served from the immutable snapshot taken at start.
class Server {
public:
    explicit Server(Database snapshot);
    ~Server();

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds and starts serving on a background thread. Port 0 picks an
    /// ephemeral port, readable via port() afterwards.
    void start(uint16_t port);
    uint16_t port() const { return port_; }

    /// Stops accepting, finishes in-flight responses, joins all workers.
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    uint16_t port_ = 0;
};

/// Client side: one request, the parsed response.
struct RemoteTable {
    std::vector<std::string> rows;  // delimited lines, exactly as served
    std::vector<std::vector<std::string>> cells() const;
};

/// Runs a query remotely. Throws NetError on connection or protocol
/// trouble and RemoteError when the server answers ERR.
RemoteTable remote_query(const std::string& host, uint16_t port, const std::string& query);

/// Sends PING, expects PONG.
bool remote_ping(const std::string& host, uint16_t port);

/// Fetches the relation names.
std::vector<std::string> remote_relations(const std::string& host, uint16_t port);

}  // namespace tsdb
