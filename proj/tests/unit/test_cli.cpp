#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "fixtures.hpp"
#include "ssmr/cli.hpp"

namespace ssmr {
namespace {

using test::sample;

// Scratch directory removed on scope exit.
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path = std::filesystem::temp_directory_path() / ("ssmr_cli_" + std::string(info->name()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string without_generated(const std::string& body) {
  std::istringstream in(body);
  std::string line, out;
  while (std::getline(in, line))
    if (line.find("generated") == std::string::npos) out += line + "\n";
  return out;
}

int run_quiet(const RunConfig& c, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int rc = run(c, out, err);
  if (err_text) *err_text = err.str();
  return rc;
}

// lambda_3 = 2 lambda_1 exactly: c = (0.1, 0.2), k = (1, 4).
MechanicalSystem resonant_pair() {
  MechanicalSystem s;
  s.name = "resonant";
  s.n = 2;
  s.M = MatrixXd::Identity(2, 2);
  s.C = Eigen::Vector2d(0.1, 0.2).asDiagonal();
  s.K = Eigen::Vector2d(1.0, 4.0).asDiagonal();
  s.g.push_back({0, 1.0, MultiIndex{3, 0, 0, 0}});
  s.f = Eigen::Vector2d(1.0, 0.0);
  return s;
}

TEST(Cli, NonresonanceFailureNamesTriple) {
  TempDir d;
  const std::string sys = d / "resonant.json";
  std::ofstream(sys) << system_to_json(resonant_pair()).dump(2);
  RunConfig c;
  c.command = "analyze";
  c.system = sys;
  c.out = d / "a.json";
  std::string err;
  EXPECT_EQ(run_quiet(c, &err), 3);
  EXPECT_NE(err.find("(2,0,3)"), std::string::npos) << err;
  EXPECT_FALSE(std::filesystem::exists(c.out));
}

TEST(Cli, UnknownCommandAndMissingFile) {
  RunConfig c;
  c.command = "nonsense";
  EXPECT_EQ(run_quiet(c), 2);
  c.command = "analyze";
  c.system = "/nonexistent/system.json";
  EXPECT_EQ(run_quiet(c), 2);
}

TEST(Cli, EvenOrderRejected) {
  RunConfig c;
  c.command = "analyze";
  c.system = sample("shaw_pierre.json");
  c.order = 4;
  EXPECT_EQ(run_quiet(c), 2);
}

TEST(Cli, BeamRoundTripKeepsEigenvalues) {
  TempDir d;
  RunConfig b;
  b.command = "beam";
  b.out = d / "beam.json";
  ASSERT_EQ(run_quiet(b), 0);

  RunConfig a;
  a.command = "analyze";
  a.system = b.out;
  a.out = d / "analysis.json";
  ASSERT_EQ(run_quiet(a), 0);

  const auto j = nlohmann::json::parse(slurp(a.out));
  const auto& mm = *test::beam_modal();
  ASSERT_EQ(j["eigenvalues"].size(), static_cast<std::size_t>(mm.lambda.size()));
  for (Eigen::Index i = 0; i < mm.lambda.size(); ++i) {
    EXPECT_EQ(j["eigenvalues"][i][0].get<double>(), mm.lambda[i].real());
    EXPECT_EQ(j["eigenvalues"][i][1].get<double>(), mm.lambda[i].imag());
  }
}

TEST(Cli, RerunsAreByteIdenticalApartFromTimestamp) {
  TempDir d;
  RunConfig c;
  c.command = "analyze";
  c.system = sample("shaw_pierre.json");
  c.order = 5;
  c.out = d / "first.json";
  c.dump_ssm = d / "first.txt";
  ASSERT_EQ(run_quiet(c), 0);
  c.out = d / "second.json";
  c.dump_ssm = d / "second.txt";
  ASSERT_EQ(run_quiet(c), 0);
  // Output paths do not enter the configuration hash.
  EXPECT_EQ(without_generated(slurp(d / "first.json")), without_generated(slurp(d / "second.json")));
  EXPECT_EQ(without_generated(slurp(d / "first.txt")), without_generated(slurp(d / "second.txt")));

  RunConfig f;
  f.command = "frc";
  f.system = sample("shaw_pierre.json");
  f.eps = 0.0027;
  f.n_rho = 400;
  f.out = d / "f1.csv";
  ASSERT_EQ(run_quiet(f), 0);
  f.out = d / "f2.csv";
  f.jobs = 2;
  ASSERT_EQ(run_quiet(f), 0);
  // Worker count is not part of the configuration; the parallel body must match.
  EXPECT_EQ(without_generated(slurp(d / "f1.csv")), without_generated(slurp(d / "f2.csv")));
}

TEST(Cli, FrcReportsTwoComponentsBelowMerger) {
  TempDir d;
  RunConfig c;
  c.command = "frc";
  c.system = sample("shaw_pierre.json");
  c.eps = 0.0027;
  c.out = d / "frc.csv";
  std::ostringstream out, err;
  ASSERT_EQ(run(c, out, err), 0) << err.str();
  EXPECT_NE(out.str().find("2 component(s)"), std::string::npos) << out.str();
  EXPECT_NE(out.str().find("3 fold(s)"), std::string::npos) << out.str();
}

TEST(Cli, IsolaOnBeam) {
  TempDir d;
  RunConfig b;
  b.command = "beam";
  b.out = d / "beam.json";
  ASSERT_EQ(run_quiet(b), 0);
  RunConfig c;
  c.command = "isola";
  c.system = b.out;
  c.eps = 0.001;
  c.out = d / "isola.json";
  ASSERT_EQ(run_quiet(c), 0);
  const auto j = nlohmann::json::parse(slurp(c.out));
  const auto& lead = j["report"]["leading"];
  ASSERT_TRUE(lead["exists"].get<bool>());
  EXPECT_NEAR(lead["rho1"].get<double>(), 0.413, 0.413 * 0.01);
  EXPECT_NEAR(lead["eps_m"].get<double>(), 0.0018, 0.0018 * 0.01);
  EXPECT_TRUE(lead["disconnected_at_eps"].get<bool>());
}

TEST(Cli, ParseOrders) {
  EXPECT_EQ(parse_orders("1..25"), std::make_pair(1u, 25u));
  EXPECT_EQ(parse_orders("4"), std::make_pair(4u, 4u));
  EXPECT_THROW(parse_orders("a..b"), Error);
}

TEST(Cli, ParseGrid) {
  const auto g = parse_grid("1:2:5");
  ASSERT_EQ(g.size(), 5u);
  EXPECT_DOUBLE_EQ(g.front(), 1.0);
  EXPECT_DOUBLE_EQ(g[2], 1.5);
  EXPECT_DOUBLE_EQ(g.back(), 2.0);
  EXPECT_EQ(parse_grid("3:3:1").size(), 1u);
  EXPECT_THROW(parse_grid("1:2"), Error);
  EXPECT_THROW(parse_grid("2:1:5"), Error);
  EXPECT_THROW(parse_grid("1:2:0"), Error);
}

TEST(Cli, ParseMonitor) {
  const auto& sys = test::shaw_pierre();
  EXPECT_EQ(parse_monitor("tip", sys), std::vector<std::size_t>{sys.monitor});
  EXPECT_EQ(parse_monitor("0,3", sys), (std::vector<std::size_t>{0, 3}));
  EXPECT_THROW(parse_monitor("4", sys), Error);
  EXPECT_THROW(parse_monitor("x", sys), Error);
  EXPECT_THROW(parse_monitor("-1", sys), Error);
}

}  // namespace
}  // namespace ssmr
