#pragma once

#include <stdexcept>
#include <string>

namespace stablefare {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or inconsistent input data (networks, routes, users, files).
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(what) {}
};

// Unparseable text input (scenario documents, CSV, numeric literals).
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(what) {}
};

// A configured resource guard was exceeded (coalition cap, node limits,
// oracle size guards).
class LimitError : public Error {
 public:
  explicit LimitError(const std::string& what) : Error(what) {}
};

}  // namespace stablefare
