#pragma once

#include <stdexcept>
#include <string>

namespace unlearn {

// Error taxonomy, mapped to process exit codes by the CLI:
//   usage_error   -> 2  (bad flags, bad parameter combinations)
//   format_error  -> 3  (malformed bank/dataset files)
//   numeric_error -> 4  (divergence, singular inverse, infeasible t, ...)
//   io_error      -> 1  (filesystem failures)
// std::invalid_argument thrown by library preconditions is treated as a
// usage error when it reaches the CLI boundary.

struct usage_error : std::runtime_error {
    explicit usage_error(const std::string& what) : std::runtime_error(what) {}
};

struct format_error : std::runtime_error {
    explicit format_error(const std::string& what) : std::runtime_error(what) {}
};

struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

struct io_error : std::runtime_error {
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitFormat = 3;
inline constexpr int kExitNumeric = 4;

}  // namespace unlearn
