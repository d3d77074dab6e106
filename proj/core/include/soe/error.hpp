#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace soe {

enum class ErrorKind {
  Parameter,         // invalid argument / distribution spec / config value
  InsufficientData,  // not enough information to compute the quantity
  DegenerateEffect,  // |r| >= 1 or w >= 1
  InsufficientN,     // sample too small for the family
  Schema,            // missing or malformed header
  Validation,        // every data row failed validation
  Domain,            // mathematically undefined input
  Io,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace soe
