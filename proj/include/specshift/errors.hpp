#pragma once

#include <stdexcept>
#include <string>

namespace specshift {

// Violated precondition, malformed configuration, or inconsistent arguments.
// Maps to CLI exit code 1.
class contract_error : public std::invalid_argument {
  public:
    explicit contract_error(const std::string& what) : std::invalid_argument(what) {}
};

// Numerical breakdown: non-PSD Gram matrix beyond round-off, diverging
// iteration, failed square root. Maps to CLI exit code 2.
class numeric_error : public std::runtime_error {
  public:
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace specshift
