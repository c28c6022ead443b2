#include "fullece/checkpoint.hpp"

#include <string>

#include "fullece/errors.hpp"

namespace fullece {

namespace {

using nlohmann::json;

json bins_to_json(std::span<const BinStats> bins) {
  json arr = json::array();
  for (const auto& b : bins) {
    arr.push_back(json::array({b.count, b.hits, b.prob_sum.raw_sum(), b.prob_sum.compensation()}));
  }
  return arr;
}

std::vector<BinStats> bins_from_json(const json& arr) {
  std::vector<BinStats> bins;
  bins.reserve(arr.size());
  for (const auto& e : arr) {
    if (!e.is_array() || e.size() != 4) throw DomainError("checkpoint bin entry must be [count, hits, sum, comp]");
    BinStats b;
    b.count = e[0].get<std::uint64_t>();
    b.hits = e[1].get<std::uint64_t>();
    b.prob_sum = CompensatedSum::from_parts(e[2].get<double>(), e[3].get<double>());
    bins.push_back(b);
  }
  return bins;
}

json header(const char* kind, std::uint32_t num_bins, std::uint32_t num_classes, std::uint64_t total) {
  return json{{"kind", kind},
              {"schema_version", kCheckpointSchemaVersion},
              {"num_bins", num_bins},
              {"num_classes", num_classes},
              {"total_records", total}};
}

void expect_kind(const json& j, const char* kind) {
  try {
    if (j.at("kind").get<std::string>() != kind) {
      throw DomainError(std::string("checkpoint is not a '") + kind + "' accumulator");
    }
    if (j.at("schema_version").get<int>() != kCheckpointSchemaVersion) {
      throw DomainError("unsupported checkpoint schema_version");
    }
  } catch (const json::exception& e) {
    throw DomainError(std::string("malformed checkpoint: ") + e.what());
  }
}

template <typename F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw DomainError(std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace

json to_checkpoint(const ConfidenceAccumulator& acc) {
  json j = header("confidence", acc.num_bins(), 0, acc.total_records());
  j["bins"] = bins_to_json(acc.bins());
  return j;
}

json to_checkpoint(const ClasswiseAccumulator& acc) {
  json j = header("classwise", acc.num_bins(), acc.num_classes(), acc.total_records());
  j["bins"] = bins_to_json(acc.cells());
  return j;
}

json to_checkpoint(const FullAccumulator& acc) {
  json j = header("full", acc.num_bins(), acc.num_classes(), acc.total_records());
  j["bins"] = bins_to_json(acc.bins());
  return j;
}

ConfidenceAccumulator confidence_from_checkpoint(const json& j) {
  expect_kind(j, "confidence");
  return guarded([&] {
    auto bins = bins_from_json(j.at("bins"));
    if (bins.size() != j.at("num_bins").get<std::uint32_t>()) throw ShapeError("checkpoint bin count mismatch");
    return ConfidenceAccumulator::from_bins(std::move(bins), j.at("total_records").get<std::uint64_t>());
  });
}

ClasswiseAccumulator classwise_from_checkpoint(const json& j, std::uint64_t cell_budget) {
  expect_kind(j, "classwise");
  return guarded([&] {
    return ClasswiseAccumulator::from_cells(j.at("num_classes").get<std::uint32_t>(),
                                            j.at("num_bins").get<std::uint32_t>(), bins_from_json(j.at("bins")),
                                            j.at("total_records").get<std::uint64_t>(), cell_budget);
  });
}

FullAccumulator full_from_checkpoint(const json& j) {
  expect_kind(j, "full");
  return guarded([&] {
    auto bins = bins_from_json(j.at("bins"));
    if (bins.size() != j.at("num_bins").get<std::uint32_t>()) throw ShapeError("checkpoint bin count mismatch");
    return FullAccumulator::from_bins(j.at("num_classes").get<std::uint32_t>(), std::move(bins),
                                      j.at("total_records").get<std::uint64_t>());
  });
}

}  // namespace fullece
