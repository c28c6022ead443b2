#include "fullece/accumulators.hpp"

#include <string>

#include "fullece/binning.hpp"
#include "fullece/errors.hpp"

namespace fullece {

namespace {

void require_bins(std::uint32_t num_bins) {
  if (num_bins == 0) throw DomainError("bin count must be at least 1");
}

void require_classes(std::uint32_t num_classes) {
  if (num_classes == 0) throw DomainError("class count must be at least 1");
}

void require_shape(std::size_t got, std::uint32_t num_classes) {
  if (got != num_classes) {
    throw ShapeError("record has " + std::to_string(got) + " classes, accumulator expects " +
                     std::to_string(num_classes));
  }
}

void require_label(std::uint32_t label, std::size_t num_classes) {
  if (label >= num_classes) {
    throw DomainError("label " + std::to_string(label) + " outside [0, " +
                      std::to_string(num_classes) + ")");
  }
}

void require_same(std::uint32_t a, std::uint32_t b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string("cannot merge accumulators with different ") + what + " (" +
                     std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

}  // namespace

void check_cell_budget(std::uint32_t num_classes, std::uint32_t num_bins, std::uint64_t cell_budget) {
  const std::uint64_t cells = std::uint64_t{num_classes} * num_bins;
  if (cells > cell_budget) throw BudgetError(cells, cell_budget);
}

// ---------------------------------------------------------------------------

ConfidenceAccumulator::ConfidenceAccumulator(std::uint32_t num_bins)
    : num_bins_(num_bins), bins_((require_bins(num_bins), num_bins)) {}

void ConfidenceAccumulator::add(std::span<const double> probs, std::uint32_t label) {
  require_label(label, probs.size());
  std::uint32_t top = 0;
  for (std::uint32_t k = 1; k < probs.size(); ++k) {
    if (probs[k] > probs[top]) top = k;
  }
  BinStats& bin = bins_[detail::bin_slot(probs[top], num_bins_)];
  ++bin.count;
  if (top == label) ++bin.hits;
  bin.prob_sum.add(probs[top]);
  ++total_;
}

void ConfidenceAccumulator::merge(const ConfidenceAccumulator& other) {
  require_same(num_bins_, other.num_bins_, "bin counts");
  for (std::uint32_t m = 0; m < num_bins_; ++m) bins_[m].merge(other.bins_[m]);
  total_ += other.total_;
}

ConfidenceAccumulator ConfidenceAccumulator::from_bins(std::vector<BinStats> bins,
                                                       std::uint64_t total_records) {
  ConfidenceAccumulator acc(static_cast<std::uint32_t>(bins.size()));
  std::uint64_t sum = 0;
  for (const auto& b : bins) {
    if (b.hits > b.count) throw DomainError("bin hit count exceeds bin count");
    sum += b.count;
  }
  if (sum != total_records) throw DomainError("bin counts do not sum to the record total");
  acc.bins_ = std::move(bins);
  acc.total_ = total_records;
  return acc;
}

// ---------------------------------------------------------------------------

ClasswiseAccumulator::ClasswiseAccumulator(std::uint32_t num_classes, std::uint32_t num_bins,
                                           std::uint64_t cell_budget)
    : num_classes_(num_classes), num_bins_(num_bins) {
  require_classes(num_classes);
  require_bins(num_bins);
  check_cell_budget(num_classes, num_bins, cell_budget);
  cells_.resize(static_cast<std::size_t>(num_classes) * num_bins);
}

void ClasswiseAccumulator::add(std::span<const double> probs, std::uint32_t label) {
  require_shape(probs.size(), num_classes_);
  require_label(label, num_classes_);
  BinStats* row = cells_.data();
  for (std::uint32_t k = 0; k < num_classes_; ++k, row += num_bins_) {
    const double p = probs[k];
    BinStats& cell = row[detail::bin_slot(p, num_bins_)];
    ++cell.count;
    cell.prob_sum.add(p);
    if (k == label) ++cell.hits;
  }
  ++total_;
}

void ClasswiseAccumulator::merge(const ClasswiseAccumulator& other) {
  require_same(num_classes_, other.num_classes_, "class counts");
  require_same(num_bins_, other.num_bins_, "bin counts");
  for (std::size_t i = 0; i < cells_.size(); ++i) cells_[i].merge(other.cells_[i]);
  total_ += other.total_;
}

ClasswiseAccumulator ClasswiseAccumulator::from_cells(std::uint32_t num_classes, std::uint32_t num_bins,
                                                      std::vector<BinStats> cells,
                                                      std::uint64_t total_records,
                                                      std::uint64_t cell_budget) {
  ClasswiseAccumulator acc(num_classes, num_bins, cell_budget);
  if (cells.size() != acc.cells_.size()) throw ShapeError("classwise cell array has the wrong size");
  for (std::uint32_t k = 0; k < num_classes; ++k) {
    std::uint64_t sum = 0;
    for (std::uint32_t m = 0; m < num_bins; ++m) {
      const BinStats& c = cells[static_cast<std::size_t>(k) * num_bins + m];
      if (c.hits > c.count) throw DomainError("cell hit count exceeds cell count");
      sum += c.count;
    }
    if (sum != total_records) throw DomainError("class bin counts do not sum to the record total");
  }
  acc.cells_ = std::move(cells);
  acc.total_ = total_records;
  return acc;
}

// ---------------------------------------------------------------------------

FullAccumulator::FullAccumulator(std::uint32_t num_classes, std::uint32_t num_bins)
    : num_classes_(num_classes), num_bins_(num_bins) {
  require_classes(num_classes);
  require_bins(num_bins);
  bins_.resize(num_bins);
}

void FullAccumulator::add(std::span<const double> probs, std::uint32_t label) {
  require_shape(probs.size(), num_classes_);
  require_label(label, num_classes_);
  const std::uint32_t m = num_bins_;
  BinStats* bins = bins_.data();
  for (const double p : probs) {
    BinStats& bin = bins[detail::bin_slot(p, m)];
    ++bin.count;
    bin.prob_sum.add(p);
  }
  ++bins[detail::bin_slot(probs[label], m)].hits;
  ++total_;
}

void FullAccumulator::merge(const FullAccumulator& other) {
  require_same(num_classes_, other.num_classes_, "class counts");
  require_same(num_bins_, other.num_bins_, "bin counts");
  for (std::uint32_t m = 0; m < num_bins_; ++m) bins_[m].merge(other.bins_[m]);
  total_ += other.total_;
}

FullAccumulator FullAccumulator::from_bins(std::uint32_t num_classes, std::vector<BinStats> bins,
                                           std::uint64_t total_records) {
  FullAccumulator acc(num_classes, static_cast<std::uint32_t>(bins.size()));
  std::uint64_t count = 0;
  std::uint64_t hits = 0;
  for (const auto& b : bins) {
    if (b.hits > b.count) throw DomainError("bin hit count exceeds bin count");
    count += b.count;
    hits += b.hits;
  }
  if (count != total_records * num_classes) throw DomainError("bin counts do not sum to N*K");
  if (hits != total_records) throw DomainError("bin hit counts do not sum to N");
  acc.bins_ = std::move(bins);
  acc.total_ = total_records;
  return acc;
}

// ---------------------------------------------------------------------------

void accumulate(const PredictionRecord& record, ConfidenceAccumulator* conf,
                ClasswiseAccumulator* cw, FullAccumulator* full) {
  if (cw) require_shape(record.probs.size(), cw->num_classes());
  if (full) require_shape(record.probs.size(), full->num_classes());
  if (conf) conf->add(record);
  if (cw) cw->add(record);
  if (full) full->add(record);
}

FullAccumulator merge_full_from_classwise(const ClasswiseAccumulator& cw) {
  const std::uint32_t m_count = cw.num_bins();
  std::vector<BinStats> bins(m_count);
  for (std::uint32_t k = 0; k < cw.num_classes(); ++k) {
    for (std::uint32_t m = 0; m < m_count; ++m) bins[m].merge(cw.cell(k, m));
  }
  return FullAccumulator::from_bins(cw.num_classes(), std::move(bins), cw.total_records());
}

}  // namespace fullece
