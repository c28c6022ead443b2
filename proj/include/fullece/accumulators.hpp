#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fullece/compensated_sum.hpp"
#include "fullece/record.hpp"

namespace fullece {

/// Default ceiling on classwise cells (K * M): 2^28.
inline constexpr std::uint64_t kDefaultCellBudget = std::uint64_t{1} << 28;

/// Sufficient statistics of one bin: entry count, true-class hits and the sum
/// of the binned probabilities.
struct BinStats {
  std::uint64_t count = 0;
  std::uint64_t hits = 0;
  CompensatedSum prob_sum;

  void merge(const BinStats& other) {
    count += other.count;
    hits += other.hits;
    prob_sum.merge(other.prob_sum);
  }
};

/// Top-1 confidence statistics (ECE). One entry per record, placed at the
/// bin of the maximum probability; the lowest index wins argmax ties.
class ConfidenceAccumulator {
 public:
  explicit ConfidenceAccumulator(std::uint32_t num_bins);

  void add(std::span<const double> probs, std::uint32_t label);
  void add(const PredictionRecord& r) { add(r.probs, r.label); }
  void merge(const ConfidenceAccumulator& other);

  std::uint32_t num_bins() const { return num_bins_; }
  std::uint64_t total_records() const { return total_; }
  std::span<const BinStats> bins() const { return bins_; }

  /// Rebuilds an accumulator from stored bins; checks conservation.
  static ConfidenceAccumulator from_bins(std::vector<BinStats> bins, std::uint64_t total_records);

 private:
  std::uint32_t num_bins_;
  std::uint64_t total_ = 0;
  std::vector<BinStats> bins_;
};

/// Per-(class, bin) statistics (cw-ECE). Every record contributes K entries.
/// Cells are stored class-major: cell(k, m) = cells[k * M + m].
class ClasswiseAccumulator {
 public:
  /// Throws BudgetError when num_classes * num_bins exceeds `cell_budget`.
  ClasswiseAccumulator(std::uint32_t num_classes, std::uint32_t num_bins,
                       std::uint64_t cell_budget = kDefaultCellBudget);

  void add(std::span<const double> probs, std::uint32_t label);
  void add(const PredictionRecord& r) { add(r.probs, r.label); }
  void merge(const ClasswiseAccumulator& other);

  std::uint32_t num_classes() const { return num_classes_; }
  std::uint32_t num_bins() const { return num_bins_; }
  std::uint64_t total_records() const { return total_; }
  std::span<const BinStats> cells() const { return cells_; }
  const BinStats& cell(std::uint32_t cls, std::uint32_t slot) const {
    return cells_[static_cast<std::size_t>(cls) * num_bins_ + slot];
  }

  static ClasswiseAccumulator from_cells(std::uint32_t num_classes, std::uint32_t num_bins,
                                         std::vector<BinStats> cells, std::uint64_t total_records,
                                         std::uint64_t cell_budget = kDefaultCellBudget);

 private:
  std::uint32_t num_classes_;
  std::uint32_t num_bins_;
  std::uint64_t total_ = 0;
  std::vector<BinStats> cells_;
};

/// Class-merged statistics (Full-ECE): the K entries of every record land in
/// one shared set of M bins. Needs M cells regardless of K.
class FullAccumulator {
 public:
  FullAccumulator(std::uint32_t num_classes, std::uint32_t num_bins);

  void add(std::span<const double> probs, std::uint32_t label);
  void add(const PredictionRecord& r) { add(r.probs, r.label); }
  void merge(const FullAccumulator& other);

  std::uint32_t num_classes() const { return num_classes_; }
  std::uint32_t num_bins() const { return num_bins_; }
  std::uint64_t total_records() const { return total_; }
  std::span<const BinStats> bins() const { return bins_; }

  static FullAccumulator from_bins(std::uint32_t num_classes, std::vector<BinStats> bins,
                                   std::uint64_t total_records);

 private:
  std::uint32_t num_classes_;
  std::uint32_t num_bins_;
  std::uint64_t total_ = 0;
  std::vector<BinStats> bins_;
};

/// Adds one record to every non-null accumulator.
void accumulate(const PredictionRecord& record, ConfidenceAccumulator* conf,
                ClasswiseAccumulator* cw, FullAccumulator* full);

/// Sums classwise cells over classes. Equal to a FullAccumulator fed the
/// same stream.
FullAccumulator merge_full_from_classwise(const ClasswiseAccumulator& cw);

/// Throws BudgetError if a classwise accumulator of this shape would not fit.
void check_cell_budget(std::uint32_t num_classes, std::uint32_t num_bins, std::uint64_t cell_budget);

}  // namespace fullece
