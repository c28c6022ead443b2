#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fullece/cli.hpp"
#include "fullece/ingest.hpp"
#include "fullece/metrics.hpp"
#include "fullece/synth.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using fullece::testing::rel_close;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = fullece::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const char* root = std::getenv("FULLECE_TEST_TMP");
    dir_ = fs::path(root ? root : fs::temp_directory_path().string()) /
           ::testing::UnitTest::GetInstance()->current_test_info()->name();
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& content) const {
    std::ofstream(path(name), std::ios::binary) << content;
    return path(name);
  }

  fs::path dir_;
};

const char* const kTwoRecords = "{\"probs\":[0.8,0.2],\"label\":0}\n{\"probs\":[0.6,0.4],\"label\":1}\n";

json parse_error_line(const std::string& err) {
  EXPECT_EQ(std::count(err.begin(), err.end(), '\n'), 1) << err;
  return json::parse(err);
}

}  // namespace

TEST_F(CliTest, EvalTwoRecordExample) {
  const auto file = write("two.ndjson", kTwoRecords);
  const auto r = run_cli({"eval", "--input", file, "--bins", "2"});
  ASSERT_EQ(r.code, fullece::cli::kExitOk) << r.err;
  const auto report = json::parse(r.out);
  EXPECT_EQ(report["schema_version"], 1);
  EXPECT_EQ(report["command"], "eval");
  EXPECT_TRUE(report.contains("generated_at"));
  EXPECT_EQ(report["config"]["bins"], 2);
  EXPECT_EQ(report["records"], 2);
  EXPECT_TRUE(rel_close(report["metrics"]["ece"].get<double>(), 0.2));
  EXPECT_TRUE(rel_close(report["metrics"]["cw-ece"].get<double>(), 0.2));
  EXPECT_TRUE(rel_close(report["metrics"]["full-ece"].get<double>(), 0.4));

  const auto per_entry = run_cli({"eval", "-i", file, "-M", "2", "--normalization", "per-entry", "--metrics", "full-ece"});
  ASSERT_EQ(per_entry.code, 0);
  const auto pe = json::parse(per_entry.out);
  EXPECT_TRUE(rel_close(pe["metrics"]["full-ece"].get<double>(), 0.2));
  EXPECT_FALSE(pe["metrics"].contains("ece"));
}

TEST_F(CliTest, EvalCsvOutputToFile) {
  const auto file = write("two.ndjson", kTwoRecords);
  const auto csv = path("out.csv");
  const auto r = run_cli({"eval", "-i", file, "--output-format", "csv", "-o", csv});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  std::ifstream in(csv);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  EXPECT_NE(text.find("full-ece"), std::string::npos);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
}

TEST_F(CliTest, SynthIsDeterministicAndMatchesLibrary) {
  const auto a = path("a.fcal");
  const auto b = path("b.fcal");
  for (const auto& out : {a, b}) {
    const auto r = run_cli({"synth", "--kind", "zipf", "--n", "800", "--k", "40", "--alpha", "0.3", "--seed", "11",
                            "--out", out});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  std::string ca((std::istreambuf_iterator<char>(fa)), {}), cb((std::istreambuf_iterator<char>(fb)), {});
  EXPECT_EQ(ca, cb);

  auto strip = [](std::string s) {
    auto j = json::parse(s);
    j.erase("generated_at");
    return j;
  };
  const auto e1 = run_cli({"eval", "-i", a});
  const auto e2 = run_cli({"eval", "-i", b});
  ASSERT_EQ(e1.code, 0) << e1.err;
  auto j1 = strip(e1.out), j2 = strip(e2.out);
  EXPECT_EQ(j1["metrics"], j2["metrics"]);

  fullece::GeneratorSpec spec;
  spec.kind = fullece::GeneratorKind::ZipfImbalanced;
  spec.num_records = 800;
  spec.num_classes = 40;
  spec.alpha = 0.3;
  spec.zipf_exponent = 1.2;
  spec.seed = 11;
  const auto records = fullece::generate(spec);
  const auto oracle = fullece::oracle_metrics(records, 10);
  // Records pass through f32 storage, so compare against re-read values.
  std::ifstream in(a, std::ios::binary);
  fullece::RecordSource src;
  src.format = fullece::Format::Fcal;
  const auto stored = fullece::read_all(src, in);
  const auto stored_oracle = fullece::oracle_metrics(stored, 10);
  EXPECT_TRUE(rel_close(j1["metrics"]["full-ece"].get<double>(), stored_oracle.full_ece));
  EXPECT_TRUE(rel_close(j1["metrics"]["cw-ece"].get<double>(), stored_oracle.cw_ece));
  EXPECT_TRUE(rel_close(j1["metrics"]["ece"].get<double>(), stored_oracle.ece));
  EXPECT_NEAR(j1["metrics"]["full-ece"].get<double>(), oracle.full_ece, 1e-5);
}

TEST_F(CliTest, ThreadCountDoesNotChangeResults) {
  const auto file = path("s.ndjson");
  ASSERT_EQ(run_cli({"synth", "--n", "1500", "--k", "7", "--seed", "3", "--out", file}).code, 0);
  const auto one = json::parse(run_cli({"eval", "-i", file, "-j", "1"}).out);
  const auto four = json::parse(run_cli({"eval", "-i", file, "-j", "4"}).out);
  for (const char* m : {"ece", "cw-ece", "full-ece"}) {
    EXPECT_TRUE(rel_close(one["metrics"][m].get<double>(), four["metrics"][m].get<double>())) << m;
  }
  EXPECT_EQ(four["records"], 1500);
}

TEST_F(CliTest, UsageErrorsExitOne) {
  auto r = run_cli({"eval", "--input", path("missing.ndjson")});
  EXPECT_EQ(r.code, fullece::cli::kExitUsage);
  EXPECT_EQ(parse_error_line(r.err)["error"], "usage");

  r = run_cli({"eval", "--bogus-flag"});
  EXPECT_EQ(r.code, fullece::cli::kExitUsage);
  parse_error_line(r.err);

  const auto file = write("two.ndjson", kTwoRecords);
  r = run_cli({"eval", "-i", file, "--metrics", "brier"});
  EXPECT_EQ(r.code, fullece::cli::kExitUsage);

  r = run_cli({"eval", "-i", file, "--memory-budget", "5"});
  EXPECT_EQ(r.code, fullece::cli::kExitUsage);
  EXPECT_EQ(parse_error_line(r.err)["error"], "budget");

  r = run_cli({"eval", "-i", file, "--memory-budget", "5", "--metrics", "ece,full-ece"});
  EXPECT_EQ(r.code, 0) << r.err;
}

TEST_F(CliTest, DataErrorsExitTwoWithLocation) {
  const auto file = write("bad.ndjson", std::string(kTwoRecords) + "{\"probs\":[0.7,0.7],\"label\":0}\n");
  const auto r = run_cli({"eval", "-i", file});
  EXPECT_EQ(r.code, fullece::cli::kExitData);
  const auto e = parse_error_line(r.err);
  EXPECT_EQ(e["error"], "data");
  EXPECT_EQ(e["record_index"], 2);
  EXPECT_EQ(e["byte_offset"], std::string(kTwoRecords).size());

  const auto label = write("label.ndjson", "{\"probs\":[0.5,0.5],\"label\":2}\n");
  EXPECT_EQ(run_cli({"eval", "-i", label}).code, fullece::cli::kExitData);

  const auto empty = write("empty.ndjson", "");
  EXPECT_EQ(run_cli({"eval", "-i", empty, "--k", "3"}).code, fullece::cli::kExitData);
}

TEST_F(CliTest, RenormalizeFlag) {
  const auto file = write("off.ndjson", "{\"probs\":[1.6,0.4],\"label\":0}\n{\"probs\":[0.6,0.4],\"label\":1}\n");
  EXPECT_EQ(run_cli({"eval", "-i", file}).code, fullece::cli::kExitData);
  const auto r = run_cli({"eval", "-i", file, "-M", "2", "--renormalize"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(rel_close(json::parse(r.out)["metrics"]["full-ece"].get<double>(), 0.4));
}

TEST_F(CliTest, LogitsInput) {
  const auto file = write("logits.ndjson", "{\"logits\":[2.0,0.0],\"label\":0}\n");
  const auto r = run_cli({"eval", "-i", file, "--metrics", "ece"});
  ASSERT_EQ(r.code, 0) << r.err;
  const double p = 1.0 / (1.0 + std::exp(-2.0));
  EXPECT_TRUE(rel_close(json::parse(r.out)["metrics"]["ece"].get<double>(), 1.0 - p));
}

TEST_F(CliTest, SparseInputWarns) {
  const auto file = write("s.sparse.ndjson", "{\"k\":5,\"top\":[[0,0.6],[2,0.2]],\"rest_mass\":0.2,\"label\":0}\n");
  const auto r = run_cli({"eval", "-i", file, "--format", "sparse-ndjson", "--k", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  const auto report = json::parse(r.out);
  ASSERT_EQ(report["warnings"].size(), 1u);
  EXPECT_EQ(report["config"]["k"], 5);
}

TEST_F(CliTest, StabilityDefaultsToSevenBinCounts) {
  const auto file = path("z.fcal");
  ASSERT_EQ(run_cli({"synth", "--kind", "zipf", "--n", "300", "--k", "50", "--seed", "1", "--out", file}).code, 0);
  const auto r = run_cli({"stability", "-i", file});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = json::parse(r.out);
  ASSERT_EQ(report["reports"].size(), 2u);
  EXPECT_EQ(report["reports"][0]["metric"], "cw-ece");
  EXPECT_EQ(report["reports"][1]["metric"], "full-ece");
  EXPECT_EQ(report["reports"][1]["values"].size(), 7u);
  EXPECT_EQ(report["reports"][1]["values"][6]["bins"], 500);
  EXPECT_TRUE(report["reports"][1]["rsd_percent"].is_number());

  const auto eval20 = json::parse(run_cli({"eval", "-i", file, "-M", "20"}).out);
  EXPECT_TRUE(rel_close(report["reports"][1]["values"][2]["value"].get<double>(),
                        eval20["metrics"]["full-ece"].get<double>()));

  const auto budget = run_cli({"stability", "-i", file, "--memory-budget", "1000"});
  EXPECT_EQ(budget.code, fullece::cli::kExitUsage);
}

TEST_F(CliTest, TokenFrequency) {
  const auto file = write("t.ndjson",
                          "{\"probs\":[0.25,0.25,0.25,0.25],\"label\":0}\n"
                          "{\"probs\":[0.25,0.25,0.25,0.25],\"label\":0}\n"
                          "{\"probs\":[0.25,0.25,0.25,0.25],\"label\":1}\n");
  const auto r = run_cli({"tokenfreq", "-i", file});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto f = json::parse(r.out)["frequency"];
  EXPECT_EQ(f["total_tokens"], 3);
  EXPECT_EQ(f["buckets"][0]["fraction"], 0.5);
  EXPECT_EQ(f["buckets"][1]["fraction"], 0.5);

  const auto empty = write("e.ndjson", "");
  const auto er = run_cli({"tokenfreq", "-i", empty, "--k", "10"});
  ASSERT_EQ(er.code, 0) << er.err;
  EXPECT_EQ(json::parse(er.out)["frequency"]["buckets"][0]["fraction"], 1.0);
}

TEST_F(CliTest, ReliabilityAggregatesToMetric) {
  const auto file = path("r.ndjson");
  ASSERT_EQ(run_cli({"synth", "--n", "500", "--k", "6", "--temperature", "2", "--out", file}).code, 0);
  for (const char* m : {"ece", "cw-ece", "full-ece"}) {
    const auto rel = run_cli({"reliability", "-i", file, "--metric", m});
    ASSERT_EQ(rel.code, 0) << rel.err;
    const auto rj = json::parse(rel.out);
    const auto ej = json::parse(run_cli({"eval", "-i", file, "--metrics", m}).out);
    EXPECT_EQ(rj["value"].get<double>(), ej["metrics"][m].get<double>()) << m;
    const std::size_t rows = std::string(m) == "cw-ece" ? 60u : 10u;
    EXPECT_EQ(rj["curve"]["rows"].size(), rows);
  }
}

TEST_F(CliTest, SeriesReportsCheckpointsInOrder) {
  const auto calibrated = path("c.fcal");
  const auto hot = path("h.fcal");
  ASSERT_EQ(run_cli({"synth", "--n", "2000", "--k", "10", "--alpha", "0.5", "--seed", "4", "--out", calibrated}).code, 0);
  ASSERT_EQ(run_cli({"synth", "--n", "2000", "--k", "10", "--alpha", "0.5", "--seed", "4", "--temperature", "3",
                     "--out", hot})
                .code,
            0);
  const auto r = run_cli({"series", "-c", "late=" + calibrated, "-c", "early=" + hot});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto s = json::parse(r.out)["series"]["checkpoints"];
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0]["checkpoint"], "late");
  EXPECT_LT(s[0]["full_ece"].get<double>(), s[1]["full_ece"].get<double>());

  EXPECT_EQ(run_cli({"series", "-c", "nolabel"}).code, fullece::cli::kExitUsage);
  EXPECT_EQ(run_cli({"series", "-c", "a=" + calibrated, "-c", "a=" + hot}).code, fullece::cli::kExitData);
}

TEST_F(CliTest, SaveStateAndResumeEqualsWholeFile) {
  const auto whole = path("w.ndjson");
  ASSERT_EQ(run_cli({"synth", "--n", "900", "--k", "5", "--seed", "9", "--out", whole}).code, 0);
  std::ifstream in(whole);
  std::string line, first, second;
  for (int i = 0; std::getline(in, line); ++i) (i < 400 ? first : second) += line + "\n";
  const auto a = write("a.ndjson", first);
  const auto b = write("b.ndjson", second);
  const auto state = path("state.json");
  ASSERT_EQ(run_cli({"eval", "-i", a, "--save-state", state}).code, 0);
  const auto resumed = run_cli({"eval", "-i", b, "--resume-from", state});
  ASSERT_EQ(resumed.code, 0) << resumed.err;
  const auto direct = json::parse(run_cli({"eval", "-i", whole}).out);
  const auto rj = json::parse(resumed.out);
  EXPECT_EQ(rj["records"], 900);
  for (const char* m : {"ece", "cw-ece", "full-ece"}) {
    EXPECT_TRUE(rel_close(rj["metrics"][m].get<double>(), direct["metrics"][m].get<double>())) << m;
  }
}

TEST_F(CliTest, BudgetFromEnvironment) {
  const auto file = write("two.ndjson", kTwoRecords);
  ::setenv(fullece::cli::kBudgetEnvVar, "3", 1);
  const auto r = run_cli({"eval", "-i", file});
  ::unsetenv(fullece::cli::kBudgetEnvVar);
  EXPECT_EQ(r.code, fullece::cli::kExitUsage);
  EXPECT_EQ(run_cli({"eval", "-i", file}).code, 0);
}
