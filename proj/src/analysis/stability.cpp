#include <algorithm>
#include <cmath>

#include "fullece/analysis.hpp"
#include "fullece/errors.hpp"

namespace fullece {

RsdStats population_rsd(std::span<const double> values) {
  if (values.empty()) throw DomainError("RSD of an empty series");
  RsdStats s;
  double total = 0.0;
  for (const double v : values) total += v;
  s.mean = total / static_cast<double>(values.size());
  double sq = 0.0;
  for (const double v : values) sq += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(values.size()));
  if (s.mean > 0.0) s.rsd_percent = 100.0 * s.stddev / s.mean;
  return s;
}

std::vector<StabilityReport> stability_sweep(RecordStream& source, std::span<const std::uint32_t> bin_counts,
                                             std::span<const Metric> metrics, Normalization normalization,
                                             std::uint64_t cell_budget) {
  if (bin_counts.empty()) throw DomainError("stability sweep needs at least one bin count");
  if (metrics.empty()) throw DomainError("stability sweep needs at least one metric");
  for (const auto m : bin_counts) {
    if (m == 0) throw DomainError("bin count must be at least 1");
  }
  const bool want_conf = std::find(metrics.begin(), metrics.end(), Metric::Ece) != metrics.end();
  const bool want_cw = std::find(metrics.begin(), metrics.end(), Metric::ClasswiseEce) != metrics.end();
  const bool want_full = std::find(metrics.begin(), metrics.end(), Metric::FullEce) != metrics.end();

  PredictionRecord record;
  std::optional<std::uint32_t> k = source.num_classes();
  bool pending = false;
  if (!k) {
    if (!source.next(record)) throw EmptyAccumulatorError("stability sweep over an empty stream");
    k = record.num_classes();
    pending = true;
  }
  if (want_cw) {
    check_cell_budget(*k, *std::max_element(bin_counts.begin(), bin_counts.end()), cell_budget);
  }

  std::vector<ConfidenceAccumulator> conf;
  std::vector<ClasswiseAccumulator> cw;
  std::vector<FullAccumulator> full;
  for (const auto m : bin_counts) {
    if (want_conf) conf.emplace_back(m);
    if (want_cw) cw.emplace_back(*k, m, cell_budget);
    if (want_full) full.emplace_back(*k, m);
  }

  auto feed = [&](const PredictionRecord& r) {
    for (auto& a : conf) a.add(r);
    for (auto& a : cw) a.add(r);
    for (auto& a : full) a.add(r);
  };
  if (pending) feed(record);
  while (source.next(record)) feed(record);

  std::vector<StabilityReport> reports;
  for (const Metric metric : metrics) {
    StabilityReport rep;
    rep.metric = metric;
    rep.normalization = normalization;
    std::vector<double> series;
    for (std::size_t i = 0; i < bin_counts.size(); ++i) {
      double v = 0.0;
      switch (metric) {
        case Metric::Ece:
          v = compute_ece(conf[i]);
          break;
        case Metric::ClasswiseEce:
          v = compute_cw_ece(cw[i]);
          break;
        case Metric::FullEce:
          v = compute_full_ece(full[i], normalization);
          break;
      }
      rep.values.emplace_back(bin_counts[i], v);
      series.push_back(v);
    }
    rep.stats = population_rsd(series);
    reports.push_back(std::move(rep));
  }
  return reports;
}

}  // namespace fullece
