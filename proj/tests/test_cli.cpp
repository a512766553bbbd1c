#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "idla/artifacts.hpp"
#include "idla/cli.hpp"

using namespace idla;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "idla-lab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("idla-lab-test-" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({}).code, 1);
  EXPECT_EQ(cli({"bogus"}).code, 1);
  EXPECT_EQ(cli({"percolate", "--dim", "9", "--seed", "1"}).code, 1);
  const CliRun missing = cli({"percolate", "--out", scratch("noseed").string()});
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.err.find("--seed"), std::string::npos);
  EXPECT_EQ(cli({"simulate", "--seed", "1", "--out", scratch("noparticles").string()}).code, 1);
}

TEST(Cli, UnknownSuiteListsSuites) {
  const CliRun r = cli({"experiment", "--seed", "1", "--suite", "none", "--out", scratch("none").string()});
  EXPECT_EQ(r.code, 1);
  for (const auto& name : available_suites()) EXPECT_NE(r.err.find(name), std::string::npos) << name;
  EXPECT_EQ(cli({"experiment", "--seed", "1", "--out", scratch("nosuite").string()}).code, 1);
}

TEST(Cli, SubcriticalIsRuntimeError) {
  const CliRun r = cli({"percolate", "--p", "0.05", "--seed", "1", "--out", scratch("sub").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("attempts"), std::string::npos);
}

TEST(Cli, PercolateWritesManifestAndRaster) {
  const fs::path dir = scratch("perc");
  ASSERT_EQ(cli({"percolate", "--extent", "12", "--p", "0.6", "--seed", "1", "--out", dir.string()}).code, 0);
  const RunManifest m = RunManifest::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(m.half_extent, 12);
  EXPECT_EQ(m.seed, 1u);
  EXPECT_EQ(m.version, software_version());
  EXPECT_EQ(m.config.at("command"), "percolate");
  const Environment env = Environment::generate(m.params());
  std::ifstream ppm(dir / "cluster.ppm", std::ios::binary);
  const Raster r = read_ppm(ppm);
  EXPECT_EQ(r.pixels, render_raster(env, nullptr, 1).pixels);
}

TEST(Cli, SingleParticleSimulation) {
  const fs::path dir = scratch("one");
  ASSERT_EQ(cli({"simulate", "--extent", "5", "--seed", "3", "--particles", "1", "--out", dir.string()}).code, 0);
  std::ifstream ppm(dir / "aggregate.ppm", std::ios::binary);
  const Raster r = read_ppm(ppm);
  int red = 0;
  for (const auto& px : r.pixels) red += px == kAggregateColor ? 1 : 0;
  EXPECT_EQ(red, 1);
  EXPECT_EQ(r.at(5, 5), kAggregateColor);
  const std::string coords = slurp(dir / "aggregate.txt");
  EXPECT_NE(coords.find("\n0 0\n"), std::string::npos);
}

TEST(Cli, StagedRunsAreByteIdentical) {
  const fs::path a = scratch("staged-a"), b = scratch("staged-b");
  for (const auto& dir : {a, b}) {
    ASSERT_EQ(cli({"simulate", "--extent", "30", "--seed", "8", "--staged", "--radius", "12",
                   "--no-timestamp", "--out", dir.string()})
                  .code,
              0);
  }
  for (const char* name : {"stats.jsonl", "trace.csv", "aggregate.txt", "aggregate.ppm", "manifest.json"}) {
    EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
  }
  std::ifstream in(a / "stats.jsonl");
  const StatsFile stats = read_stats(in);
  EXPECT_FALSE(stats.header.contains("timestamp"));
  std::vector<Record> stages;
  for (const auto& row : stats.rows) {
    const Record r = Record::parse(row);
    if (r["kind"] == "stage") stages.push_back(r);
  }
  ASSERT_GE(stages.size(), 2u);
  const double bound = std::cbrt(12.0);
  for (std::size_t j = 0; j + 2 < stages.size(); ++j) {
    const double k = stages[j]["k_j"].get<double>();
    EXPECT_GT(k, bound);
    EXPECT_DOUBLE_EQ(stages[j + 1]["n_j"].get<double>() - stages[j]["n_j"].get<double>(), std::sqrt(k));
  }
}

TEST(Cli, ExperimentRowsIgnoreTimestampAndWorkers) {
  const fs::path a = scratch("exp-a"), b = scratch("exp-b");
  ASSERT_EQ(cli({"experiment", "--extent", "20", "--seed", "5", "--suite", "shape,abelian,exit",
                 "--radius", "4", "--replicas", "10", "--samples", "2000", "--particles", "3",
                 "--out", a.string()})
                .code,
            0);
  ASSERT_EQ(cli({"experiment", "--extent", "20", "--seed", "5", "--suite", "shape,abelian,exit",
                 "--radius", "4", "--replicas", "10", "--samples", "2000", "--particles", "3",
                 "--workers", "3", "--out", b.string()})
                .code,
            0);
  std::ifstream ia(a / "stats.jsonl"), ib(b / "stats.jsonl");
  const StatsFile sa = read_stats(ia), sb = read_stats(ib);
  EXPECT_TRUE(sa.header.contains("timestamp"));
  EXPECT_EQ(sa.header["root_seed"], 5);
  EXPECT_EQ(sa.rows, sb.rows);
  ASSERT_EQ(sa.rows.size(), 3u);
  EXPECT_EQ(Record::parse(sa.rows[0])["kind"], "shape");
  EXPECT_EQ(Record::parse(sa.rows[1])["lemma"], "abelian");
  EXPECT_EQ(Record::parse(sa.rows[1])["verdict"], "pass");
}

TEST(Cli, SimulateFromManifest) {
  const fs::path env_dir = scratch("man-env"), run_dir = scratch("man-run");
  ASSERT_EQ(cli({"percolate", "--extent", "15", "--p", "0.65", "--seed", "4", "--no-raster", "--out",
                 env_dir.string()})
                .code,
            0);
  EXPECT_FALSE(fs::exists(env_dir / "cluster.ppm"));
  ASSERT_EQ(cli({"simulate", "--manifest", (env_dir / "manifest.json").string(), "--seed", "9",
                 "--particles", "50", "--out", run_dir.string()})
                .code,
            0);
  const RunManifest a = RunManifest::parse(slurp(env_dir / "manifest.json"));
  const RunManifest b = RunManifest::parse(slurp(run_dir / "manifest.json"));
  EXPECT_EQ(a.accepted_seed, b.accepted_seed);
  EXPECT_EQ(a.cluster_size, b.cluster_size);
  EXPECT_EQ(cli({"simulate", "--manifest", "/nonexistent/manifest.json", "--seed", "1", "--particles",
                 "1", "--out", run_dir.string()})
                .code,
            2);
}
