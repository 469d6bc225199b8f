#pragma once

#include <stdexcept>
#include <string>

namespace claimsift {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or inconsistent input data (bad records, unknown labels, ...).
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(what) {}
};

// Artifact integrity failures: fingerprint mismatches, truncated checkpoints.
class IntegrityError : public Error {
 public:
  explicit IntegrityError(const std::string& what) : Error(what) {}
};

}  // namespace claimsift
