#include <set>

#include "fullece/analysis.hpp"
#include "fullece/errors.hpp"

namespace fullece {

SeriesReport checkpoint_series(std::span<const CheckpointInput> checkpoints, std::uint32_t num_bins,
                               Normalization normalization) {
  std::set<std::string> seen;
  for (const auto& c : checkpoints) {
    if (!seen.insert(c.label).second) throw DomainError("duplicate checkpoint label '" + c.label + "'");
  }

  SeriesReport report;
  report.normalization = normalization;
  for (const auto& c : checkpoints) {
    try {
      auto stream = c.open();
      std::optional<FullAccumulator> full;
      if (auto k = stream->num_classes()) full.emplace(*k, num_bins);
      PredictionRecord r;
      while (stream->next(r)) {
        if (!full) full.emplace(r.num_classes(), num_bins);
        full->add(r);
      }
      if (!full || full->total_records() == 0) {
        throw EmptyAccumulatorError("checkpoint '" + c.label + "' has no records");
      }
      report.entries.push_back({c.label, compute_full_ece(*full, normalization), full->total_records(),
                                full->num_classes(), num_bins});
    } catch (const ParseError& e) {
      throw e.with_context("checkpoint '" + c.label + "'");
    } catch (const ShapeError& e) {
      throw ShapeError("checkpoint '" + c.label + "': " + e.what());
    } catch (const DomainError& e) {
      throw DomainError("checkpoint '" + c.label + "': " + e.what());
    }
  }
  return report;
}

}  // namespace fullece
