#pragma once

#include <stdexcept>
#include <string>

namespace autocalib {

// File-level failures raised while reading feature or config files.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

class SchemaVersionMismatch : public ParseError {
 public:
  explicit SchemaVersionMismatch(const std::string& what) : ParseError(what) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Contract violations of the numeric kernels.
class ZeroPolynomial : public std::invalid_argument {
 public:
  ZeroPolynomial() : std::invalid_argument("polynomial is identically zero") {}
};

class OutOfRange : public std::domain_error {
 public:
  explicit OutOfRange(const std::string& what) : std::domain_error(what) {}
};

class MissingRotation : public std::logic_error {
 public:
  MissingRotation() : std::logic_error("calibration has no rotation") {}
};

}  // namespace autocalib
