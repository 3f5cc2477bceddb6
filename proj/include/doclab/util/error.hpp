// SPDX-License-Identifier: Apache-2.0
#ifndef DOCLAB_UTIL_ERROR_HPP_
#define DOCLAB_UTIL_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace doclab {

// Error surfaces follow the contracts of the public module APIs. Each class
// corresponds to one contract family so tests can catch the precise kind.

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error("shape error: " + msg) {}
};

struct InputError : std::runtime_error {
    explicit InputError(const std::string& msg) : std::runtime_error("input error: " + msg) {}
};

// Degenerate inputs: all-false loss masks, empty responses, empty datasets.
struct DegenerateInputError : std::runtime_error {
    explicit DegenerateInputError(const std::string& msg)
        : std::runtime_error("degenerate input: " + msg) {}
};

struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error("usage error: " + msg) {}
};

struct TruncationError : std::runtime_error {
    explicit TruncationError(const std::string& msg)
        : std::runtime_error("truncation error: " + msg) {}
};

struct VocabError : std::runtime_error {
    explicit VocabError(const std::string& msg) : std::runtime_error("vocabulary error: " + msg) {}
};

// NaN/Inf escaping a numeric path, with the offending tensor named.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error("numeric error: " + msg) {}
};

// Checkpoint/vocab mismatches, corrupt archives, hash failures.
struct IntegrityError : std::runtime_error {
    explicit IntegrityError(const std::string& msg)
        : std::runtime_error("integrity error: " + msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error("io error: " + msg) {}
};

}  // namespace doclab

#endif  // DOCLAB_UTIL_ERROR_HPP_
