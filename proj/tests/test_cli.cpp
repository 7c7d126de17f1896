#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "pbc/data_io.hpp"
#include "pbc/table.hpp"

namespace fs = std::filesystem;
using pbc::cli::run_cli;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

double cell(const pbc::ResultTable& t, std::size_t row, const std::string& col) {
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    if (t.columns[c] == col) {
      return std::visit(
          [](const auto& v) -> double {
            if constexpr (std::is_same_v<std::decay_t<decltype(v)>, std::string>) {
              return NAN;
            } else {
              return static_cast<double>(v);
            }
          },
          t.rows.at(row)[c]);
    }
  }
  ADD_FAILURE() << "no column " << col;
  return NAN;
}

pbc::ResultTable read_table(const fs::path& p) {
  std::ifstream in(p);
  return pbc::read_csv_table(in);
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("pbc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, FitSyntheticFleet) {
  const auto records = pbc::generate_synthetic_fleet(
      2.0, pbc::JumpDistribution::weibull_log(2.0, 2.2), 5000, 365.0, 5);
  pbc::write_cost_csv(records, fs::path(path("costs.csv")));
  const auto r = run({"fit", path("costs.csv"), "--out", path("fit.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("shape k"), std::string::npos);
  const auto doc = nlohmann::json::parse(slurp(path("fit.json")));
  EXPECT_EQ(doc.at("dist"), "weibull-log");
  EXPECT_NEAR(doc.at("shape").get<double>(), 2.0, 0.1);
  EXPECT_NEAR(doc.at("scale").get<double>(), 2.2, 0.1);
  EXPECT_EQ(doc.at("n_samples").get<std::size_t>(), records.size());

  const auto priced = run({"price", "--fit-json", path("fit.json"), "--lambda", "1", "--paths",
                           "2000", "--out", path("p.csv")});
  ASSERT_EQ(priced.code, 0) << priced.err;
  EXPECT_NE(priced.out.find("weibull-log"), std::string::npos);
}

TEST_F(CliTest, FitHeaderOnlyCsvIsUsageError) {
  std::ofstream(path("empty.csv")) << "unit_id,event_time_days,cost_eur\n";
  const auto r = run({"fit", "--input", path("empty.csv")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST_F(CliTest, FitMalformedRowReportsLine) {
  std::ofstream(path("bad.csv")) << "unit_id,event_time_days,cost_eur\nA,1,20\nB,2,-5\n";
  const auto r = run({"fit", path("bad.csv")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
}

TEST_F(CliTest, FitMissingFileIsFailure) {
  EXPECT_EQ(run({"fit", path("nope.csv")}).code, 1);
}

TEST_F(CliTest, PriceZeroRate) {
  const auto r = run({"price", "--lambda", "0", "--paths", "1000", "--out", path("p.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = read_table(path("p.csv"));
  EXPECT_EQ(cell(t, 0, "premium_C"), 0.0);
  EXPECT_EQ(cell(t, 0, "total_price_P"), 0.0);
}

TEST_F(CliTest, PriceUnitConstantJump) {
  const auto r = run({"price", "--dist", "constant", "--value", "1", "--lambda", "1", "--horizon",
                      "1", "--paths", "200000", "--out", path("p.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = read_table(path("p.csv"));
  EXPECT_NEAR(cell(t, 0, "premium_C"), std::exp(-1.0), 3.0 * cell(t, 0, "std_error"));
  EXPECT_EQ(cell(t, 0, "strike_K"), 1.0);
  EXPECT_EQ(cell(t, 0, "n_paths"), 200000.0);
}

TEST_F(CliTest, PriceByteIdenticalAcrossRunsAndThreads) {
  const std::vector<std::string> base{"price", "--dist", "weibull-log", "--lambda", "3",
                                      "--paths", "20000", "--seed", "42"};
  for (const auto& [name, threads] :
       std::vector<std::pair<std::string, std::string>>{{"a", "1"}, {"b", "1"}, {"c", "2"}, {"d", "4"}}) {
    auto args = base;
    args.insert(args.end(), {"--threads", threads, "--out", path(name + ".json"), "--format", "json"});
    ASSERT_EQ(run(args).code, 0);
  }
  const auto a = slurp(path("a.json"));
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(path("b.json")));
  EXPECT_EQ(a, slurp(path("c.json")));
  EXPECT_EQ(a, slurp(path("d.json")));
}

TEST_F(CliTest, PriceDiscountAndStrikeMode) {
  ASSERT_EQ(run({"price", "--lambda", "2", "--paths", "5000", "--out", path("a.csv")}).code, 0);
  ASSERT_EQ(run({"price", "--lambda", "2", "--paths", "5000", "--discount-rate", "0.1",
                 "--discount-tau", "1", "--out", path("b.csv")})
                .code,
            0);
  ASSERT_EQ(run({"price", "--lambda", "2", "--paths", "5000", "--strike-mode", "single-jump-mean",
                 "--out", path("c.csv")})
                .code,
            0);
  const auto a = read_table(path("a.csv"));
  const auto b = read_table(path("b.csv"));
  const auto c = read_table(path("c.csv"));
  EXPECT_NEAR(cell(b, 0, "premium_C"), std::exp(-0.1) * cell(a, 0, "premium_C"), 1e-12);
  EXPECT_EQ(cell(a, 0, "strike_K"), 20.0);
  EXPECT_EQ(cell(c, 0, "strike_K"), 10.0);
}

TEST_F(CliTest, PriceRateTable) {
  std::ofstream(path("rate.csv")) << "t,lambda\n0,0\n10,2\n";
  const auto r = run({"price", "--dist", "constant", "--value", "3", "--rate-table", path("rate.csv"),
                      "--horizon", "10", "--paths", "5000", "--out", path("p.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = read_table(path("p.csv"));
  EXPECT_DOUBLE_EQ(cell(t, 0, "expected_cost"), 30.0);
  EXPECT_DOUBLE_EQ(cell(t, 0, "lambda"), 1.0);
}

TEST_F(CliTest, SweepSinglePointMatchesPrice) {
  ASSERT_EQ(run({"sweep", "--lambda-grid", "2:2:1", "--paths", "5000", "--seed", "7", "--out",
                 path("s.csv")})
                .code,
            0);
  ASSERT_EQ(run({"price", "--lambda", "2", "--paths", "5000", "--seed", "7", "--out", path("p.csv")})
                .code,
            0);
  EXPECT_EQ(slurp(path("s.csv")), slurp(path("p.csv")));
}

TEST_F(CliTest, SweepRowsSatisfyTotalPrice) {
  const auto r = run({"sweep", "--lambda-grid", "0:2:0.5", "--paths", "4000", "--out", path("s.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = read_table(path("s.csv"));
  ASSERT_EQ(t.rows.size(), 5u);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    EXPECT_DOUBLE_EQ(cell(t, i, "lambda"), 0.5 * static_cast<double>(i));
    EXPECT_EQ(cell(t, i, "total_price_P"), cell(t, i, "premium_C") + cell(t, i, "expected_cost"));
    EXPECT_EQ(cell(t, i, "seed"), 1.0 + static_cast<double>(i));
  }
}

TEST_F(CliTest, SweepBadGridIsUsageError) {
  EXPECT_EQ(run({"sweep", "--lambda-grid", "3:1:1"}).code, 2);
  EXPECT_EQ(run({"sweep", "--lambda-grid", "1:3"}).code, 2);
  EXPECT_EQ(run({"sweep", "--lambda-grid", "0:1:0"}).code, 2);
}

TEST_F(CliTest, OracleGaussianPasses) {
  const auto r = run({"oracle", "--lambda", "2", "--paths", "100000", "--out", path("o.csv")});
  ASSERT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
  EXPECT_EQ(cell(read_table(path("o.csv")), 0, "pass"), 1.0);
}

TEST_F(CliTest, OracleSeriesTruncationExitsOne) {
  const auto r = run({"oracle", "--lambda", "50", "--max-terms", "10"});
  EXPECT_EQ(r.code, 1);
}

TEST_F(CliTest, OracleRejectsUnsupportedLaw) {
  const auto r = run({"oracle", "--dist", "weibull-log"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("unsupported by oracle"), std::string::npos) << r.err;
}

TEST_F(CliTest, OracleZeroIntensity) {
  const auto r = run({"oracle", "--lambda", "0", "--paths", "100"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
}

TEST_F(CliTest, SimulateFlatPath) {
  const auto r = run({"simulate", "--lambda", "0", "--steps", "10", "--out", path("sim.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = read_table(path("sim.csv"));
  ASSERT_EQ(t.rows.size(), 11u);
  for (std::size_t i = 0; i < t.rows.size(); ++i) EXPECT_EQ(cell(t, i, "X"), 0.0);
}

TEST_F(CliTest, SimulateDeterministic) {
  ASSERT_EQ(run({"simulate", "--lambda", "4", "--count", "3", "--seed", "9", "--out", path("a.csv")}).code, 0);
  ASSERT_EQ(run({"simulate", "--lambda", "4", "--count", "3", "--seed", "9", "--out", path("b.csv")}).code, 0);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
}

TEST_F(CliTest, GenerateAndSummary) {
  ASSERT_EQ(run({"generate", "--dist", "weibull-log", "--lambda", "1", "--units", "200", "--seed",
                 "3", "--out", path("fleet.csv")})
                .code,
            0);
  const auto r = run({"summary", path("fleet.csv"), "--units", "200", "--window", "365"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("lambda hat"), std::string::npos) << r.out;
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"price", "--paths", "many"}).code, 2);
  EXPECT_EQ(run({"price", "--lambda", "-1"}).code, 2);
  EXPECT_EQ(run({"price", "--dist", "cauchy"}).code, 2);
  EXPECT_EQ(run({"price", "--dist", "empirical"}).code, 2);
  EXPECT_EQ(run({"price", "--format", "xml"}).code, 2);
  EXPECT_EQ(run({"price", "--dist", "weibull-log", "--shape", "1", "--scale", "1"}).code, 2);
}

TEST_F(CliTest, HelpExitsZero) {
  const auto r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("price"), std::string::npos);
}
