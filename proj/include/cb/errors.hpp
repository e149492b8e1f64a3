#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cb {

// Mismatched lengths or counts between related structures: vector vs schema,
// feature arity, empty training sets, out-of-range indices.
struct arity_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A value that violates the declared schema (unknown category, wrong kind,
// invalid feature definition).
struct schema_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input file. Carries the 1-based line number.
struct parse_error : std::runtime_error {
    parse_error(const std::string& msg, std::size_t line)
        : std::runtime_error(msg + " (line " + std::to_string(line) + ")"),
          line_number(line) {}
    std::size_t line_number;
};

// Invalid run or generator configuration.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// File could not be opened or written.
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A model update produced a non-finite parameter. Carries the stream
// position of the offending record when known.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg, std::int64_t position = -1)
        : std::runtime_error(position >= 0
                                 ? msg + " (record " + std::to_string(position) + ")"
                                 : msg),
          position(position) {}
    std::int64_t position;
};

// Query for an arm the learner array has never seen.
struct unknown_arm_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Metric requested on an empty or too-short log.
struct metric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace cb
