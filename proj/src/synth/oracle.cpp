#include <algorithm>
#include <cmath>
#include <utility>

#include "fullece/errors.hpp"
#include "fullece/synth.hpp"

namespace fullece {

namespace {

// Interval membership by search over the upper edges m/M: the bin is the
// first m with p <= m/M. Zero falls into the first bin.
class EdgeTable {
 public:
  explicit EdgeTable(std::uint32_t num_bins) : upper_(num_bins) {
    for (std::uint32_t m = 1; m <= num_bins; ++m) {
      upper_[m - 1] = static_cast<double>(m) / static_cast<double>(num_bins);
    }
  }
  std::uint32_t locate(double p) const {
    const auto it = std::lower_bound(upper_.begin(), upper_.end(), p);
    return static_cast<std::uint32_t>(it - upper_.begin());
  }

 private:
  std::vector<double> upper_;
};

// |B|/divisor * |A - C| for one materialized bin, with long double sums.
template <typename Hit, typename Prob>
long double literal_term(std::size_t size, long double divisor, Hit hit, Prob prob) {
  if (size == 0) return 0.0L;
  long double hits = 0.0L;
  long double probs = 0.0L;
  for (std::size_t j = 0; j < size; ++j) {
    hits += hit(j) ? 1.0L : 0.0L;
    probs += prob(j);
  }
  const long double n = static_cast<long double>(size);
  const long double accuracy = hits / n;
  const long double confidence = probs / n;
  return n / divisor * std::fabs(accuracy - confidence);
}

}  // namespace

OracleMetrics oracle_metrics(std::span<const PredictionRecord> records, std::uint32_t num_bins,
                             Normalization normalization) {
  if (num_bins == 0) throw DomainError("bin count must be at least 1");
  if (records.empty()) throw EmptyAccumulatorError("metric is undefined for an empty stream");
  const std::size_t n = records.size();
  const std::uint32_t k_count = records.front().num_classes();
  for (const auto& r : records) {
    if (r.num_classes() != k_count) throw ShapeError("records disagree on class count");
    validate_record(r);
  }
  const EdgeTable edges(num_bins);

  // B_m: indices i whose top-1 confidence lies in bin m.
  std::vector<std::vector<std::size_t>> conf_bins(num_bins);
  std::vector<std::uint32_t> predicted(n);
  std::vector<double> confidence(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = records[i].probs;
    std::uint32_t best = 0;
    for (std::uint32_t k = 0; k < k_count; ++k) {
      if (p[k] > p[best]) best = k;
    }
    predicted[i] = best;
    confidence[i] = p[best];
    conf_bins[edges.locate(p[best])].push_back(i);
  }

  // B_{m,k}: indices i whose class-k probability lies in bin m.
  std::vector<std::vector<std::size_t>> cw_bins(static_cast<std::size_t>(k_count) * num_bins);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::uint32_t k = 0; k < k_count; ++k) {
      cw_bins[static_cast<std::size_t>(k) * num_bins + edges.locate(records[i].probs[k])].push_back(i);
    }
  }

  // B*_m as the union of (i, k) pairs over classes.
  std::vector<std::vector<std::pair<std::size_t, std::uint32_t>>> full_bins(num_bins);
  for (std::uint32_t k = 0; k < k_count; ++k) {
    for (std::uint32_t m = 0; m < num_bins; ++m) {
      for (const std::size_t i : cw_bins[static_cast<std::size_t>(k) * num_bins + m]) {
        full_bins[m].emplace_back(i, k);
      }
    }
  }

  OracleMetrics out;
  const long double n_ld = static_cast<long double>(n);
  const long double nk = n_ld * static_cast<long double>(k_count);

  long double ece = 0.0L;
  for (const auto& bin : conf_bins) {
    ece += literal_term(
        bin.size(), n_ld, [&](std::size_t j) { return predicted[bin[j]] == records[bin[j]].label; },
        [&](std::size_t j) { return static_cast<long double>(confidence[bin[j]]); });
    out.confidence_counts.push_back(bin.size());
  }

  long double cw = 0.0L;
  for (std::uint32_t k = 0; k < k_count; ++k) {
    for (std::uint32_t m = 0; m < num_bins; ++m) {
      const auto& bin = cw_bins[static_cast<std::size_t>(k) * num_bins + m];
      cw += literal_term(
          bin.size(), nk, [&](std::size_t j) { return records[bin[j]].label == k; },
          [&](std::size_t j) { return static_cast<long double>(records[bin[j]].probs[k]); });
      out.classwise_counts.push_back(bin.size());
    }
  }

  const long double full_divisor = normalization == Normalization::PaperFull ? n_ld : nk;
  long double full = 0.0L;
  for (const auto& bin : full_bins) {
    full += literal_term(
        bin.size(), full_divisor,
        [&](std::size_t j) { return records[bin[j].first].label == bin[j].second; },
        [&](std::size_t j) { return static_cast<long double>(records[bin[j].first].probs[bin[j].second]); });
    out.full_counts.push_back(bin.size());
  }

  out.ece = static_cast<double>(ece);
  out.cw_ece = static_cast<double>(cw);
  out.full_ece = static_cast<double>(full);
  return out;
}

}  // namespace fullece
