#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fullece {

/// Absolute tolerance on |sum(probs) - 1| accepted for a record.
inline constexpr double kProbSumTolerance = 1e-6;

/// One prediction event: a K-dimensional probability vector and its true class.
struct PredictionRecord {
  std::vector<double> probs;
  std::uint32_t label = 0;

  std::uint32_t num_classes() const { return static_cast<std::uint32_t>(probs.size()); }
};

/// Describes why (probs, label) is not a valid record, or nullopt if it is.
std::optional<std::string> record_violation(std::span<const double> probs, std::uint32_t label);

/// Throws DomainError when the record violates its invariants.
void validate_record(std::span<const double> probs, std::uint32_t label);
inline void validate_record(const PredictionRecord& r) { validate_record(r.probs, r.label); }

/// Pull-based source of records. Implementations are single-consumer.
class RecordStream {
 public:
  virtual ~RecordStream() = default;

  /// Writes the next record into `out`; returns false at end of stream.
  virtual bool next(PredictionRecord& out) = 0;

  /// Class count, when known before the first record is read.
  virtual std::optional<std::uint32_t> num_classes() const { return std::nullopt; }
};

/// RecordStream over an in-memory list (not owned).
class VectorStream final : public RecordStream {
 public:
  explicit VectorStream(std::span<const PredictionRecord> records) : records_(records) {}

  bool next(PredictionRecord& out) override {
    if (pos_ == records_.size()) return false;
    out = records_[pos_++];
    return true;
  }

  std::optional<std::uint32_t> num_classes() const override {
    if (records_.empty()) return std::nullopt;
    return records_.front().num_classes();
  }

 private:
  std::span<const PredictionRecord> records_;
  std::size_t pos_ = 0;
};

}  // namespace fullece
