#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ssmc {

using VertexId = std::uint32_t;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition or argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The whole population (or the whole probability mass) reached the cemetery.
class ExtinctionError : public Error {
 public:
  using Error::Error;
};

}  // namespace ssmc
