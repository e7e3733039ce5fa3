#ifndef MEANDISP_ERRORS_HPP
#define MEANDISP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace meandisp {

// Error taxonomy mirrors the CLI exit codes: usage 2, data 3, numerical 4.

// Bad arguments to a routine or the command line.
struct usage_error : std::runtime_error {
  explicit usage_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent input data (CSV problems, broken mixture rows,
// out-of-domain responses).
struct data_error : std::runtime_error {
  explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure: singular designs, divergent iterations, out-of-domain
// arguments to the probability kernels.
struct numeric_error : std::runtime_error {
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace meandisp

#endif
