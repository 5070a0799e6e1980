// SPDX-License-Identifier: Apache-2.0
#include "tsdb/server.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cstring>
#include <mutex>
#include <thread>

#include "tsdb/text.hpp"

namespace tsdb {

namespace {

void send_all(int fd, const std::string& payload) {
    size_t sent = 0;
    while (sent < payload.size()) {
        ssize_t n = ::send(fd, payload.data() + sent, payload.size() - sent, MSG_NOSIGNAL);
        if (n <= 0) return;  // client went away; nothing to salvage
        sent += static_cast<size_t>(n);
    }
}

/// Reads one \n-terminated line; false on connection close.
bool read_line(int fd, std::string& buffer, std::string& line) {
    while (true) {
        auto newline = buffer.find('\n');
        if (newline != std::string::npos) {
            line = buffer.substr(0, newline);
            buffer.erase(0, newline + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            return true;
        }
        char chunk[1024];
        ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
        if (n <= 0) return false;
        buffer.append(chunk, static_cast<size_t>(n));
    }
}

}  // namespace

struct Server::Impl {
    Database snapshot;
    int listen_fd = -1;
    std::atomic<bool> running{false};
    std::thread acceptor;
    std::mutex workers_mutex;
    std::vector<std::thread> workers;

    explicit Impl(Database db) : snapshot(std::move(db)) {}

    void handle_connection(int fd) {
        std::string buffer, line;
        while (read_line(fd, buffer, line)) {
            send_all(fd, respond(line));
        }
        ::close(fd);
    }

    std::string respond(const std::string& request) const {
        if (request == "PING") return "PONG\n";
        if (request == "RELATIONS") {
            std::string out =
                "OK " + std::to_string(snapshot.schema().relations().size()) + "\n";
            for (const auto& decl : snapshot.schema().relations()) out += decl.name + "\n";
            out += ".\n";
            return out;
        }
        if (request.starts_with("QUERY ")) {
            std::string text = trim(request.substr(6));
            if (!text.empty() && text.front() == '\\') {
                // meta and mutating commands have no remote surface
                return "ERR 400 read-only server: commands are not accepted\n";
            }
            try {
                ResultTable table = run_query(text, snapshot);
                std::string out = "OK " + std::to_string(table.rows.size()) + "\n";
                for (const auto& row : table.delimited_lines()) out += row + "\n";
                out += ".\n";
                return out;
            } catch (const Error& e) {
                std::string message = e.what();
                for (auto& c : message) {
                    if (c == '\n') c = ' ';
                }
                return "ERR 422 " + message + "\n";
            }
        }
        return "ERR 400 expected QUERY, RELATIONS, or PING\n";
    }

    void accept_loop() {
        while (running) {
            int fd = ::accept(listen_fd, nullptr, nullptr);
            if (fd < 0) {
                if (!running) break;
                continue;
            }
            std::lock_guard<std::mutex> lock(workers_mutex);
            workers.emplace_back([this, fd] { handle_connection(fd); });
        }
    }
};

Server::Server(Database snapshot) : impl_(std::make_unique<Impl>(std::move(snapshot))) {}

Server::~Server() { stop(); }

void Server::start(uint16_t port) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw NetError("cannot create a socket");
    int enable = 1;
    setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &enable, sizeof enable);

    sockaddr_in address{};
    address.sin_family = AF_INET;
    address.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    address.sin_port = htons(port);
    if (::bind(fd, reinterpret_cast<sockaddr*>(&address), sizeof address) != 0) {
        ::close(fd);
        throw NetError("cannot bind port " + std::to_string(port) + ": " +
                       std::strerror(errno));
    }
    if (::listen(fd, 16) != 0) {
        ::close(fd);
        throw NetError("cannot listen on port " + std::to_string(port));
    }
    socklen_t length = sizeof address;
    getsockname(fd, reinterpret_cast<sockaddr*>(&address), &length);
    port_ = ntohs(address.sin_port);

    impl_->listen_fd = fd;
    impl_->running = true;
    impl_->acceptor = std::thread([this] { impl_->accept_loop(); });
}

void Server::stop() {
    if (!impl_ || !impl_->running.exchange(false)) return;
    ::shutdown(impl_->listen_fd, SHUT_RDWR);
    ::close(impl_->listen_fd);
    if (impl_->acceptor.joinable()) impl_->acceptor.join();
    std::lock_guard<std::mutex> lock(impl_->workers_mutex);
    for (auto& worker : impl_->workers) {
        if (worker.joinable()) worker.join();
    }
    impl_->workers.clear();
}

// ---------------------------------------------------------------------------
// client

namespace {

class Connection {
public:
    Connection(const std::string& host, uint16_t port) {
        addrinfo hints{};
        hints.ai_family = AF_INET;
        hints.ai_socktype = SOCK_STREAM;
        addrinfo* found = nullptr;
        int rc = getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &found);
        if (rc != 0 || !found) {
            throw NetError("cannot resolve " + host + ": " + gai_strerror(rc));
        }
        fd_ = ::socket(found->ai_family, found->ai_socktype, found->ai_protocol);
        if (fd_ < 0 || ::connect(fd_, found->ai_addr, found->ai_addrlen) != 0) {
            freeaddrinfo(found);
            if (fd_ >= 0) ::close(fd_);
            throw NetError("cannot connect to " + host + ":" + std::to_string(port));
        }
        freeaddrinfo(found);
    }

    ~Connection() {
        if (fd_ >= 0) ::close(fd_);
    }

    void send_line(const std::string& line) { send_all(fd_, line + "\n"); }

    std::string need_line() {
        std::string line;
        if (!read_line(fd_, buffer_, line)) {
            throw NetError("connection closed mid-response");
        }
        return line;
    }

private:
    int fd_ = -1;
    std::string buffer_;
};

[[noreturn]] void raise_error_response(const std::string& line) {
    // "ERR <code> <message>"
    std::string rest = line.substr(4);
    auto space = rest.find(' ');
    int code = 0;
    if (auto parsed = parse_int(rest.substr(0, space))) code = static_cast<int>(*parsed);
    throw RemoteError(code, space == std::string::npos ? "" : rest.substr(space + 1));
}

std::vector<std::string> read_ok_block(Connection& connection) {
    std::string head = connection.need_line();
    if (head.starts_with("ERR ")) raise_error_response(head);
    if (!head.starts_with("OK ")) {
        throw NetError("protocol violation: expected OK or ERR, got \"" + head + "\"");
    }
    auto count = parse_int(head.substr(3));
    if (!count || *count < 0) {
        throw NetError("protocol violation: bad row count in \"" + head + "\"");
    }
    std::vector<std::string> rows;
    rows.reserve(static_cast<size_t>(*count));
    for (int64_t i = 0; i < *count; ++i) rows.push_back(connection.need_line());
    std::string terminator = connection.need_line();
    if (terminator != ".") {
        throw NetError("protocol violation: missing \".\" terminator");
    }
    return rows;
}

}  // namespace

std::vector<std::vector<std::string>> RemoteTable::cells() const {
    std::vector<std::vector<std::string>> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        auto fields = split_record_line(row);
        if (!fields) throw NetError("protocol violation: bad row escaping");
        out.push_back(*fields);
    }
    return out;
}

RemoteTable remote_query(const std::string& host, uint16_t port, const std::string& query) {
    Connection connection(host, port);
    connection.send_line("QUERY " + query);
    return RemoteTable{read_ok_block(connection)};
}

bool remote_ping(const std::string& host, uint16_t port) {
    Connection connection(host, port);
    connection.send_line("PING");
    return connection.need_line() == "PONG";
}

std::vector<std::string> remote_relations(const std::string& host, uint16_t port) {
    Connection connection(host, port);
    connection.send_line("RELATIONS");
    return read_ok_block(connection);
}

}  // namespace tsdb
