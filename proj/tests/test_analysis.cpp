#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "fullece/analysis.hpp"
#include "fullece/errors.hpp"
#include "fullece/evaluate.hpp"
#include "fullece/ingest.hpp"
#include "fullece/report_io.hpp"
#include "fullece/synth.hpp"
#include "test_util.hpp"

using namespace fullece;
using fullece::testing::rel_close;

TEST(Rsd, Examples) {
  const std::vector<double> constant{0.3, 0.3, 0.3, 0.3};
  EXPECT_EQ(*population_rsd(constant).rsd_percent, 0.0);

  const std::vector<double> v{1.0, 2.0, 3.0};
  const auto s = population_rsd(v);
  EXPECT_DOUBLE_EQ(s.mean, 2.0);
  EXPECT_NEAR(s.stddev, std::sqrt(2.0 / 3.0), 1e-15);
  EXPECT_NEAR(*s.rsd_percent, 40.824829046386306, 1e-12);

  const std::vector<double> zeros{0.0, 0.0};
  EXPECT_FALSE(population_rsd(zeros).rsd_percent.has_value());
  EXPECT_THROW(population_rsd(std::vector<double>{}), DomainError);
}

TEST(Stability, SinglePassEqualsIndependentPasses) {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::ZipfImbalanced;
  spec.num_records = 300;
  spec.num_classes = 200;
  spec.alpha = 0.3;
  spec.seed = 5;
  const auto records = generate(spec);
  const std::vector<std::uint32_t> bins(kStabilityBins.begin(), kStabilityBins.end());
  const std::vector<Metric> metrics{Metric::Ece, Metric::ClasswiseEce, Metric::FullEce};

  VectorStream stream(records);
  const auto reports = stability_sweep(stream, bins, metrics, Normalization::PerEntry);
  ASSERT_EQ(reports.size(), 3u);

  for (std::size_t i = 0; i < bins.size(); ++i) {
    ConfidenceAccumulator conf(bins[i]);
    ClasswiseAccumulator cw(200, bins[i]);
    FullAccumulator full(200, bins[i]);
    for (const auto& r : records) accumulate(r, &conf, &cw, &full);
    EXPECT_EQ(reports[0].values[i].first, bins[i]);
    EXPECT_TRUE(rel_close(reports[0].values[i].second, compute_ece(conf)));
    EXPECT_TRUE(rel_close(reports[1].values[i].second, compute_cw_ece(cw)));
    EXPECT_TRUE(rel_close(reports[2].values[i].second, compute_full_ece(full, Normalization::PerEntry)));
  }
  std::vector<double> full_values;
  for (const auto& [m, v] : reports[2].values) full_values.push_back(v);
  EXPECT_EQ(*reports[2].stats.rsd_percent, *population_rsd(full_values).rsd_percent);
}

namespace {

// Counts how many records a sweep pulls before failing.
class CountingStream final : public RecordStream {
 public:
  explicit CountingStream(std::vector<PredictionRecord> records) : records_(std::move(records)) {}
  bool next(PredictionRecord& out) override {
    if (pos_ == records_.size()) return false;
    out = records_[pos_++];
    return true;
  }
  std::size_t pulled() const { return pos_; }

 private:
  std::vector<PredictionRecord> records_;
  std::size_t pos_ = 0;
};

}  // namespace

TEST(Stability, BudgetIsCheckedBeforeProcessing) {
  GeneratorSpec spec;
  spec.num_records = 50;
  spec.num_classes = 100;
  CountingStream stream(generate(spec));
  const std::vector<std::uint32_t> bins{5, 10, 500};
  const std::vector<Metric> metrics{Metric::ClasswiseEce};
  EXPECT_THROW(stability_sweep(stream, bins, metrics, Normalization::PaperFull, 100 * 499), BudgetError);
  EXPECT_LE(stream.pulled(), 1u);

  // Full-ECE alone is never limited by the budget.
  CountingStream again(generate(spec));
  const std::vector<Metric> full_only{Metric::FullEce};
  EXPECT_NO_THROW(stability_sweep(again, bins, full_only, Normalization::PaperFull, 1));
}

TEST(Stability, InvalidArguments) {
  const auto records = fullece::testing::two_record_stream();
  VectorStream a(records);
  const std::vector<Metric> metrics{Metric::FullEce};
  EXPECT_THROW(stability_sweep(a, std::vector<std::uint32_t>{}, metrics, Normalization::PaperFull), DomainError);
  VectorStream b(records);
  EXPECT_THROW(stability_sweep(b, std::vector<std::uint32_t>{0, 5}, metrics, Normalization::PaperFull), DomainError);
  std::vector<PredictionRecord> none;
  VectorStream c(none);
  EXPECT_THROW(stability_sweep(c, std::vector<std::uint32_t>{5}, metrics, Normalization::PaperFull),
               EmptyAccumulatorError);
}

TEST(TokenFrequency, Examples) {
  const std::vector<std::uint32_t> labels{0, 0, 1};
  const auto rep = token_frequency(labels, 4);
  EXPECT_EQ(rep.fractions[0], 0.5);
  EXPECT_EQ(rep.fractions[1], 0.5);
  EXPECT_EQ(rep.fractions[2], 0.0);
  EXPECT_EQ(rep.total_tokens, 3u);

  const auto empty = token_frequency(std::vector<std::uint32_t>{}, 10);
  EXPECT_EQ(empty.fractions[0], 1.0);
  EXPECT_EQ(empty.class_counts[0], 10u);

  EXPECT_THROW(token_frequency(std::vector<std::uint32_t>{4}, 4), DomainError);
}

TEST(TokenFrequency, BucketEdges) {
  EXPECT_EQ(frequency_bucket(0), 0u);
  EXPECT_EQ(frequency_bucket(1), 1u);
  EXPECT_EQ(frequency_bucket(10), 1u);
  EXPECT_EQ(frequency_bucket(11), 2u);
  EXPECT_EQ(frequency_bucket(100), 2u);
  EXPECT_EQ(frequency_bucket(101), 3u);
  EXPECT_EQ(frequency_bucket(1000), 3u);
  EXPECT_EQ(frequency_bucket(1001), 4u);
}

TEST(TokenFrequency, MatchesDirectCountingOnConstructedStreams) {
  // Class c occurs occ[c] times; the expected buckets follow by hand.
  const std::vector<std::uint64_t> occ{0, 0, 0, 1, 10, 11, 100, 101, 1000, 1001, 5000, 3};
  std::vector<std::uint32_t> labels;
  for (std::uint32_t c = 0; c < occ.size(); ++c) labels.insert(labels.end(), occ[c], c);
  std::mt19937_64 rng(1);
  std::shuffle(labels.begin(), labels.end(), rng);
  const auto rep = token_frequency(labels, static_cast<std::uint32_t>(occ.size()));
  const std::array<std::uint64_t, 5> expected{3, 3, 2, 2, 2};
  EXPECT_EQ(rep.class_counts, expected);
  double total = 0.0;
  for (double f : rep.fractions) total += f;
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_EQ(rep.total_tokens, labels.size());
}

TEST(Series, SingleCheckpointMatchesDirectEvaluation) {
  GeneratorSpec spec;
  spec.num_records = 500;
  spec.num_classes = 12;
  spec.alpha = 0.5;
  spec.seed = 3;
  const auto records = generate(spec);
  const std::vector<CheckpointInput> inputs{
      {"step-1", [&]() -> std::unique_ptr<RecordStream> { return std::make_unique<VectorStream>(records); }}};
  const auto rep = checkpoint_series(inputs, 10, Normalization::PaperFull);
  ASSERT_EQ(rep.entries.size(), 1u);
  FullAccumulator full(12, 10);
  for (const auto& r : records) full.add(r);
  EXPECT_EQ(rep.entries[0].full_ece, compute_full_ece(full));
  EXPECT_EQ(rep.entries[0].num_records, 500u);
  EXPECT_EQ(rep.entries[0].num_classes, 12u);
}

TEST(Series, DistortedCheckpointScoresWorse) {
  GeneratorSpec spec;
  spec.num_records = 3000;
  spec.num_classes = 10;
  spec.alpha = 0.5;
  spec.seed = 8;
  const auto calibrated = generate(spec);
  std::vector<PredictionRecord> distorted;
  for (const auto& r : calibrated) distorted.push_back(apply_temperature(r, 3.0));
  const std::vector<CheckpointInput> inputs{
      {"calibrated", [&]() -> std::unique_ptr<RecordStream> { return std::make_unique<VectorStream>(calibrated); }},
      {"t3", [&]() -> std::unique_ptr<RecordStream> { return std::make_unique<VectorStream>(distorted); }}};
  const auto rep = checkpoint_series(inputs, 10, Normalization::PerEntry);
  ASSERT_EQ(rep.entries.size(), 2u);
  EXPECT_EQ(rep.entries[0].label, "calibrated");
  EXPECT_GT(rep.entries[1].full_ece, rep.entries[0].full_ece);
}

TEST(Series, ErrorsCarryTheCheckpointLabel) {
  auto bad = []() -> std::unique_ptr<RecordStream> {
    struct Owning : RecordStream {
      std::istringstream in{"{\"probs\":[0.5,0.5],\"label\":0}\n{\"probs\":[0.9,0.5],\"label\":0}\n"};
      NdjsonReader reader{in, {}};
      bool next(PredictionRecord& r) override { return reader.next(r); }
    };
    return std::make_unique<Owning>();
  };
  const std::vector<CheckpointInput> inputs{{"ckpt-7", bad}};
  try {
    checkpoint_series(inputs, 10, Normalization::PaperFull);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("ckpt-7"), std::string::npos);
    EXPECT_EQ(e.record_index(), 1u);
  }
  const auto records = fullece::testing::two_record_stream();
  auto ok = [&]() -> std::unique_ptr<RecordStream> { return std::make_unique<VectorStream>(records); };
  const std::vector<CheckpointInput> dup{{"a", ok}, {"a", ok}};
  EXPECT_THROW(checkpoint_series(dup, 10, Normalization::PaperFull), DomainError);
}

TEST(Evaluate, ThreadedFileEvaluationMatchesSerial) {
  GeneratorSpec spec;
  spec.num_records = 997;
  spec.num_classes = 16;
  spec.alpha = 0.7;
  spec.seed = 2;
  const auto records = generate(spec);
  const auto dir = std::filesystem::temp_directory_path() / "fullece_eval_test";
  std::filesystem::create_directories(dir);
  const auto fcal_path = dir / "s.fcal";
  const auto ndjson_path = dir / "s.ndjson";
  {
    std::ofstream f(fcal_path, std::ios::binary);
    FcalWriter w(f, 16);
    for (const auto& r : records) w.write(r);
    std::ofstream n(ndjson_path);
    for (const auto& r : records) write_ndjson_record(n, r);
  }
  for (auto [path, fmt] : {std::pair{fcal_path, Format::Fcal}, std::pair{ndjson_path, Format::Ndjson}}) {
    RecordSource src;
    src.format = fmt;
    EvalConfig config;
    const auto serial = evaluate_file(path, src, config).accumulators.metrics(Normalization::PaperFull);
    for (unsigned threads : {2u, 3u, 7u}) {
      config.threads = threads;
      const auto result = evaluate_file(path, src, config);
      EXPECT_EQ(result.accumulators.total_records(), 997u);
      const auto sharded = result.accumulators.metrics(Normalization::PaperFull);
      for (const auto& [m, v] : serial) EXPECT_TRUE(rel_close(v, sharded.at(m))) << metric_name(m);
    }
  }
  std::filesystem::remove_all(dir);
}

TEST(Reports, CsvAndJsonShapes) {
  const std::vector<double> v{1.0, 2.0, 3.0};
  StabilityReport rep;
  rep.metric = Metric::ClasswiseEce;
  rep.values = {{5, 1.0}, {10, 2.0}, {20, 3.0}};
  rep.stats = population_rsd(v);
  const std::vector<StabilityReport> reps{rep};
  std::ostringstream csv;
  write_csv(csv, reps);
  const std::string text = csv.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
  const auto j = to_json(std::span<const StabilityReport>(reps));
  EXPECT_EQ(j[0]["metric"], "cw-ece");
  EXPECT_EQ(j[0]["values"].size(), 3u);

  const auto freq = token_frequency(std::vector<std::uint32_t>{0, 0, 1}, 4);
  std::ostringstream fcsv;
  write_csv(fcsv, freq);
  EXPECT_NE(fcsv.str().find("1-10,2,0.5"), std::string::npos);
}
