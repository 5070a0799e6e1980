// SPDX-License-Identifier: Apache-2.0
//
// Reference mock adapter for harness tests: reads one item input per line
// and accepts it iff its token count (excluding a sentence-final
// punctuation token) is at most N.
//
//   tsdb-mock-adapter N
//   tsdb-mock-adapter --reject-all
//   tsdb-mock-adapter N --sleep-on TOKEN MS   hang before answering
//   tsdb-mock-adapter N --crash-on TOKEN      exit without answering
//   tsdb-mock-adapter N --garbage-on TOKEN    answer off-protocol
//   tsdb-mock-adapter N --flag-unanalyzed     reject with the unanalyzed flag

#include <cctype>
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

namespace {

bool punctuation_only(const std::string& token) {
    if (token.empty()) return false;
    for (unsigned char c : token) {
        if (c >= 0x80 || !std::ispunct(c)) return false;
    }
    return true;
}

std::vector<std::string> tokens_of(const std::string& line) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : line) {
        if (c == ' ') {
            tokens.push_back(current);
            current.clear();
        } else {
            current += c;
        }
    }
    tokens.push_back(current);
    return tokens;
}

}  // namespace

int main(int argc, char** argv) {
    long max_length = -1;
    bool reject_all = false;
    bool flag_unanalyzed = false;
    std::string sleep_token, crash_token, garbage_token;
    long sleep_ms = 0;

    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg == "--reject-all") {
            reject_all = true;
        } else if (arg == "--flag-unanalyzed") {
            flag_unanalyzed = true;
        } else if (arg == "--sleep-on" && i + 2 < argc) {
            sleep_token = argv[++i];
            sleep_ms = std::strtol(argv[++i], nullptr, 10);
        } else if (arg == "--crash-on" && i + 1 < argc) {
            crash_token = argv[++i];
        } else if (arg == "--garbage-on" && i + 1 < argc) {
            garbage_token = argv[++i];
        } else {
            max_length = std::strtol(arg.c_str(), nullptr, 10);
        }
    }
    if (!reject_all && max_length < 0) {
        std::cerr << "usage: tsdb-mock-adapter N | --reject-all [options]\n";
        return 2;
    }

    std::string line;
    while (std::getline(std::cin, line)) {
        auto tokens = tokens_of(line);
        long length = static_cast<long>(tokens.size());
        if (!tokens.empty() && punctuation_only(tokens.back())) --length;

        auto contains = [&](const std::string& token) {
            if (token.empty()) return false;
            for (const auto& t : tokens) {
                if (t == token) return true;
            }
            return false;
        };
        if (contains(crash_token)) return 3;
        if (contains(sleep_token)) {
            std::this_thread::sleep_for(std::chrono::milliseconds(sleep_ms));
        }
        if (contains(garbage_token)) {
            std::cout << "WHAT\n" << std::flush;
            continue;
        }

        if (!reject_all && length <= max_length) {
            std::cout << "ACCEPT 1 1\n" << std::flush;
        } else if (flag_unanalyzed) {
            std::cout << "REJECT 1 unanalyzed\n" << std::flush;
        } else {
            std::cout << "REJECT 1\n" << std::flush;
        }
    }
    return 0;
}
