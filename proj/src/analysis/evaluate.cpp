#include "fullece/evaluate.hpp"

#include <exception>
#include <fstream>
#include <thread>
#include <vector>

#include "fullece/errors.hpp"

namespace fullece {

AccumulatorSet::AccumulatorSet(std::uint32_t num_classes, const EvalConfig& config)
    : num_classes_(num_classes) {
  const std::uint32_t m = config.binning.num_bins;
  if (config.metrics.count(Metric::ClasswiseEce)) cw_.emplace(num_classes, m, config.cell_budget);
  if (config.metrics.count(Metric::Ece)) conf_.emplace(m);
  if (config.metrics.count(Metric::FullEce)) full_.emplace(num_classes, m);
}

std::uint64_t AccumulatorSet::total_records() const {
  if (conf_) return conf_->total_records();
  if (cw_) return cw_->total_records();
  if (full_) return full_->total_records();
  return 0;
}

void AccumulatorSet::merge(const AccumulatorSet& other) {
  if (!other.initialized()) return;
  if (!initialized()) {
    *this = other;
    return;
  }
  if (num_classes_ != other.num_classes_) throw ShapeError("cannot merge accumulator sets with different K");
  if (conf_.has_value() != other.conf_.has_value() || cw_.has_value() != other.cw_.has_value() ||
      full_.has_value() != other.full_.has_value()) {
    throw ShapeError("cannot merge accumulator sets with different metric sets");
  }
  if (conf_) conf_->merge(*other.conf_);
  if (cw_) cw_->merge(*other.cw_);
  if (full_) full_->merge(*other.full_);
}

std::map<Metric, double> AccumulatorSet::metrics(Normalization normalization) const {
  std::map<Metric, double> out;
  if (conf_) out[Metric::Ece] = compute_ece(*conf_);
  if (cw_) out[Metric::ClasswiseEce] = compute_cw_ece(*cw_);
  if (full_) out[Metric::FullEce] = compute_full_ece(*full_, normalization);
  return out;
}

namespace {

void drain(RecordStream& stream, const EvalConfig& config, AccumulatorSet& acc) {
  if (!acc.initialized()) {
    if (auto k = stream.num_classes()) acc = AccumulatorSet(*k, config);
  }
  PredictionRecord record;
  while (stream.next(record)) {
    if (!acc.initialized()) acc = AccumulatorSet(record.num_classes(), config);
    acc.add(record);
  }
}

std::ifstream open_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

}  // namespace

EvalResult evaluate_stream(RecordStream& stream, const EvalConfig& config) {
  EvalResult result;
  drain(stream, config, result.accumulators);
  if (auto* reader = dynamic_cast<RecordReader*>(&stream)) result.saw_sparse = reader->saw_sparse();
  return result;
}

EvalResult evaluate_file(const std::filesystem::path& path, const RecordSource& source, const EvalConfig& config) {
  const unsigned threads = std::max(config.threads, 1u);
  if (threads == 1) {
    auto in = open_binary(path);
    auto reader = open_reader(source, in);
    return evaluate_stream(*reader, config);
  }

  std::vector<ByteShard> shards;
  {
    auto in = open_binary(path);
    if (source.format == Format::Fcal) {
      const std::uint32_t k = read_fcal_header(in);
      in.seekg(0, std::ios::end);
      const auto size = static_cast<std::uint64_t>(in.tellg());
      const std::uint64_t rec = fcal_record_size(k);
      // A trailing partial record is reported by the last shard's reader.
      const std::uint64_t count = (size - kFcalHeaderSize + rec - 1) / rec;
      shards = plan_fcal_shards(count, threads);
      shards.back().end = std::numeric_limits<std::uint64_t>::max();
    } else {
      shards = plan_ndjson_shards(in, threads);
    }
  }

  std::vector<EvalResult> partial(shards.size());
  std::vector<std::exception_ptr> errors(shards.size());
  auto work = [&](std::size_t i) {
    try {
      auto in = open_binary(path);
      const ByteShard& s = shards[i];
      std::unique_ptr<RecordReader> reader;
      if (source.format == Format::Fcal) {
        const std::uint64_t limit = s.end == std::numeric_limits<std::uint64_t>::max()
                                        ? std::numeric_limits<std::uint64_t>::max()
                                        : s.end - s.begin;
        reader = std::make_unique<FcalReader>(in, source, s.begin, limit);
      } else {
        reader = std::make_unique<NdjsonReader>(in, source, s.begin, s.end, s.first_record);
      }
      partial[i] = evaluate_stream(*reader, config);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < shards.size(); ++i) pool.emplace_back(work, i);
  work(0);
  for (auto& t : pool) t.join();

  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  EvalResult result;
  for (const auto& p : partial) {
    result.accumulators.merge(p.accumulators);
    result.saw_sparse = result.saw_sparse || p.saw_sparse;
  }
  return result;
}

}  // namespace fullece
