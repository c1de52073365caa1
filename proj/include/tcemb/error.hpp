#pragma once

#include <stdexcept>
#include <string>

namespace tcemb {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shape or length disagreement between operands.
struct DimError : Error {
  using Error::Error;
};

/// Malformed input data, files, or labels.
struct DataError : Error {
  using Error::Error;
};

/// Invalid configuration value or unknown key.
struct ConfigError : Error {
  using Error::Error;
};

/// Non-finite values or numerically degenerate state.
struct NumericError : Error {
  using Error::Error;
};

/// Objects used together that were not produced together.
struct StateError : Error {
  using Error::Error;
};

}  // namespace tcemb
