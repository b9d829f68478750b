#pragma once

#include <stdexcept>
#include <string>

namespace tim4rec {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape/rank mismatches and out-of-range indexing.
struct ShapeError : Error {
  using Error::Error;
};

// Invalid or inconsistent configuration values.
struct ConfigError : Error {
  using Error::Error;
};

// Malformed input data, unusable datasets, bad ids.
struct DataError : Error {
  using Error::Error;
};

// An operation's precondition was violated by the caller.
struct ContractError : Error {
  using Error::Error;
};

namespace detail {
inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractError(msg);
}
}  // namespace detail

}  // namespace tim4rec
