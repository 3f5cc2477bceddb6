// SPDX-License-Identifier: Apache-2.0
#ifndef DOCLAB_UTIL_IO_HPP_
#define DOCLAB_UTIL_IO_HPP_

#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "doclab/util/error.hpp"
#include "doclab/util/sha256.hpp"

namespace doclab {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed: " + path);
}

inline std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

inline std::string file_sha256(const std::string& path) {
    return Sha256::hex_of(read_file(path));
}

// Fixed-precision float formatting so metric files are byte-stable across runs.
inline std::string format_fixed(double v, int digits = 6) {
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(digits);
    ss << v;
    return ss.str();
}

// Fans read-only work out over a small number of threads. Item i is always
// processed with the same arguments regardless of scheduling, so results are
// order-independent; callers write into pre-sized slots indexed by i.
inline void parallel_for(size_t n, const std::function<void(size_t)>& fn, unsigned max_threads = 0) {
    if (n == 0) return;
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (max_threads != 0 && max_threads < hw) hw = max_threads;
    const unsigned workers = static_cast<unsigned>(std::min<size_t>(hw, n));
    if (workers <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> threads;
    threads.reserve(workers);
    std::exception_ptr first_error = nullptr;
    std::mutex err_mutex;
    for (unsigned w = 0; w < workers; ++w) {
        threads.emplace_back([&, w]() {
            try {
                for (size_t i = w; i < n; i += workers) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace doclab

#endif  // DOCLAB_UTIL_IO_HPP_
