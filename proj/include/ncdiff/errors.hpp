#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ncdiff {

struct DivisionByZero : std::domain_error {
  DivisionByZero() : std::domain_error("division by zero") {}
};

struct ParseError : std::invalid_argument {
  std::size_t offset;
  ParseError(const std::string& msg, std::size_t off)
      : std::invalid_argument(msg + " at byte " + std::to_string(off)), offset(off) {}
};

struct UnknownIdentifier : std::invalid_argument {
  std::string name;
  std::size_t offset;
  UnknownIdentifier(const std::string& n, std::size_t off)
      : std::invalid_argument("unknown identifier '" + n + "' at byte " + std::to_string(off)),
        name(n), offset(off) {}
};

struct ZeroDenominator : std::domain_error {
  explicit ZeroDenominator(const std::string& where)
      : std::domain_error("zero denominator: " + where) {}
};

// Invalid calculus data (bad indices, J^2 != -1, missing connection...).
struct SpecError : std::invalid_argument {
  explicit SpecError(const std::string& msg) : std::invalid_argument(msg) {}
};

// An optional piece of structure (sigma^-1, sigma_E, J) was needed but not supplied.
struct MissingCapability : std::runtime_error {
  std::string capability;
  MissingCapability(const std::string& cap, const std::string& msg)
      : std::runtime_error(cap + ": " + msg), capability(cap) {}
};

inline MissingCapability sigma_required(const std::string& where) {
  return MissingCapability("sigma_required", where);
}

struct PreconditionFailed : std::runtime_error {
  std::string condition;
  PreconditionFailed(const std::string& cond, const std::string& msg)
      : std::runtime_error("condition (" + cond + ") failed: " + msg), condition(cond) {}
};

struct GradeMismatch : std::invalid_argument {
  explicit GradeMismatch(const std::string& msg) : std::invalid_argument(msg) {}
};

}  // namespace ncdiff
