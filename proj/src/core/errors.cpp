#include "fullece/errors.hpp"

namespace fullece {

namespace {

std::string describe(const std::string& reason, std::optional<std::uint64_t> record,
                     std::optional<std::uint64_t> offset) {
  std::string out = reason;
  if (record) out += " (record " + std::to_string(*record);
  if (offset) out += std::string(record ? ", " : " (") + "byte offset " + std::to_string(*offset);
  if (record || offset) out += ")";
  return out;
}

}  // namespace

BudgetError::BudgetError(std::uint64_t requested_cells, std::uint64_t budget_cells)
    : Error("classwise accumulation needs " + std::to_string(requested_cells) +
            " cells, exceeding the budget of " + std::to_string(budget_cells) +
            "; use Full-ECE-only mode (M cells regardless of K) or raise the budget"),
      requested_(requested_cells),
      budget_(budget_cells) {}

ParseError::ParseError(std::string message, std::optional<std::uint64_t> record_index,
                       std::optional<std::uint64_t> byte_offset)
    : Error(describe(message, record_index, byte_offset)),
      reason_(std::move(message)),
      record_index_(record_index),
      byte_offset_(byte_offset) {}

ParseError ParseError::with_context(const std::string& context) const {
  return ParseError(context + ": " + reason_, record_index_, byte_offset_);
}

}  // namespace fullece
