#pragma once

#include <json.hpp>

#include "fullece/accumulators.hpp"

namespace fullece {

/// JSON checkpoint format version for serialized accumulators.
inline constexpr int kCheckpointSchemaVersion = 1;

// Accumulators serialize as {"kind", "schema_version", "num_bins",
// "num_classes", "total_records", "bins": [[count, hits, sum, comp], ...]}.
// Classwise bins are class-major. Restoring re-checks conservation.

nlohmann::json to_checkpoint(const ConfidenceAccumulator& acc);
nlohmann::json to_checkpoint(const ClasswiseAccumulator& acc);
nlohmann::json to_checkpoint(const FullAccumulator& acc);

ConfidenceAccumulator confidence_from_checkpoint(const nlohmann::json& j);
ClasswiseAccumulator classwise_from_checkpoint(const nlohmann::json& j,
                                               std::uint64_t cell_budget = kDefaultCellBudget);
FullAccumulator full_from_checkpoint(const nlohmann::json& j);

}  // namespace fullece
