// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lhsynth {

// Broken caller precondition: shape mismatch, cache reuse, out-of-range ratio
// passed where the contract forbids it.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Base of all recoverable runtime failures.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class MeasurementError : public Error {
 public:
  MeasurementError(const std::string& what, std::size_t dim)
      : Error("dim " + std::to_string(dim) + ": " + what), dim_(dim) {}
  std::size_t dim() const { return dim_; }

 private:
  std::size_t dim_;
};

class IntegrityError : public Error {
 public:
  using Error::Error;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

}  // namespace lhsynth
