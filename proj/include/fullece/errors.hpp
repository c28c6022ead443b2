#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace fullece {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value lies outside the domain of an operation (bad probability, bad
/// temperature, invalid generator spec, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Class count or bin count of two operands disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A metric was requested from an accumulator holding no records.
class EmptyAccumulatorError : public Error {
 public:
  using Error::Error;
};

/// Classwise accumulation would allocate more cells than the configured budget.
class BudgetError : public Error {
 public:
  BudgetError(std::uint64_t requested_cells, std::uint64_t budget_cells);

  std::uint64_t requested_cells() const { return requested_; }
  std::uint64_t budget_cells() const { return budget_; }

 private:
  std::uint64_t requested_;
  std::uint64_t budget_;
};

/// Malformed or invalid input record.
class ParseError : public Error {
 public:
  ParseError(std::string message, std::optional<std::uint64_t> record_index,
             std::optional<std::uint64_t> byte_offset);

  const std::string& reason() const { return reason_; }
  std::optional<std::uint64_t> record_index() const { return record_index_; }
  std::optional<std::uint64_t> byte_offset() const { return byte_offset_; }

  /// Same error with `context` prepended to the reason.
  ParseError with_context(const std::string& context) const;

 private:
  std::string reason_;
  std::optional<std::uint64_t> record_index_;
  std::optional<std::uint64_t> byte_offset_;
};

}  // namespace fullece
