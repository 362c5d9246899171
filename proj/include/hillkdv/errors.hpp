#pragma once

#include <stdexcept>
#include <string>

namespace hillkdv {

/// Bad user input: malformed potential records, invalid configuration,
/// violated preconditions on experiment parameters.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A numerical procedure failed or produced a result that contradicts a
/// structural property it must satisfy (interlacing, positivity, ...).
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace hillkdv
