#include <gtest/gtest.h>

#include <sstream>

#include "idla/artifacts.hpp"
#include "support.hpp"

using namespace idla;
using idla::testing::at;
using idla::testing::lattice;
using idla::testing::percolation;

TEST(Raster, ThreeClassColouring) {
  const auto env = percolation(2, 6, 0.6, 4);
  ParticleStreams streams(2, 0);
  const Growth g = grow(env, env.origin(), 10, std::nullopt, streams);
  const Raster r = render_raster(env, &g.aggregate, 2);
  ASSERT_EQ(r.width, 13);
  ASSERT_EQ(r.height, 13);
  for (int row = 0; row < r.height; ++row) {
    for (int col = 0; col < r.width; ++col) {
      const Site s = env.site_of(raster_vertex(env, col, row));
      const auto px = r.at(col, row);
      if (g.aggregate.contains(s)) {
        EXPECT_EQ(px, kAggregateColor);
      } else if (env.in_cluster(s)) {
        EXPECT_EQ(px, kClusterColor);
      } else {
        EXPECT_EQ(px, kOffClusterColor);
      }
    }
  }
  // Top-left pixel is (-L, L); the centre is the origin.
  EXPECT_EQ(raster_vertex(env, 0, 0), (Vertex{-6, 6}));
  EXPECT_EQ(raster_vertex(env, 6, 6), (Vertex{0, 0}));
  EXPECT_EQ(r.at(6, 6), kAggregateColor);
}

TEST(Raster, SingleParticleIsOneRedPixel) {
  const auto env = lattice(2, 4);
  ParticleStreams streams(1, 0);
  const Growth g = grow(env, env.origin(), 1, std::nullopt, streams);
  const Raster r = render_raster(env, &g.aggregate, 1);
  int red = 0;
  for (const auto& px : r.pixels) red += px == kAggregateColor ? 1 : 0;
  EXPECT_EQ(red, 1);
  EXPECT_EQ(r.at(4, 4), kAggregateColor);
}

TEST(Raster, PpmRoundTrip) {
  const auto env = percolation(2, 5, 0.7, 1);
  const Raster r = render_raster(env, nullptr, 99);
  std::stringstream buf;
  write_ppm(buf, r);
  EXPECT_EQ(buf.str().rfind("P6\n# idla-lab ", 0), 0u);
  const Raster back = read_ppm(buf);
  EXPECT_EQ(back.width, r.width);
  EXPECT_EQ(back.height, r.height);
  EXPECT_EQ(back.pixels, r.pixels);
  EXPECT_NE(back.comment.find("seed=99"), std::string::npos);
  EXPECT_NE(back.comment.find(software_version()), std::string::npos);
}

TEST(Raster, LineAndSlice) {
  const auto line = lattice(1, 3);
  EXPECT_EQ(render_raster(line, nullptr, 0).height, 1);
  const auto cube = lattice(3, 2);
  const Raster r = render_raster(cube, nullptr, 0);
  EXPECT_EQ(r.width, 5);
  EXPECT_EQ(r.height, 5);
  EXPECT_EQ(raster_vertex(cube, 0, 0), (Vertex{-2, 2, 0}));
}

TEST(Stats, HeaderThenRows) {
  std::stringstream buf;
  {
    StatsWriter w(buf, 7, "experiment", "2020-01-01T00:00:00Z");
    Record r;
    r["kind"] = "x";
    w.write(r);
  }
  const StatsFile f = read_stats(buf);
  EXPECT_EQ(f.header["schema_version"], kStatsSchemaVersion);
  EXPECT_EQ(f.header["root_seed"], 7);
  EXPECT_EQ(f.header["software_version"], software_version());
  EXPECT_EQ(f.header["timestamp"], "2020-01-01T00:00:00Z");
  ASSERT_EQ(f.rows.size(), 1u);
  EXPECT_EQ(f.rows[0], "{\"kind\":\"x\"}");
}

TEST(Stats, StageRowsCarryInfinity) {
  const auto env = lattice(2, 30);
  ParticleStreams streams(4, 0);
  const StagedResult r = staged_construction(env, 10.0, streams);
  const auto rows = stage_records(r.trace);
  ASSERT_EQ(rows.size(), r.trace.stages.size() + 1);
  EXPECT_EQ(rows[rows.size() - 2]["n_j"], "inf");
  EXPECT_EQ(rows.back()["kind"], "stage_summary");
  std::stringstream csv;
  write_trace_csv(csv, r.trace, 4);
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line.rfind("# idla-lab", 0), 0u);
  std::getline(csv, line);
  EXPECT_EQ(line, "j,n_j,k_j,settled");
}

TEST(Stats, LemmaRecordShape) {
  LemmaEstimate est;
  est.lemma = "demo";
  est.parameters = {{"n", 3.0}};
  est.estimate = std::numeric_limits<double>::infinity();
  est.verdict = true;
  const Record r = to_record(est);
  EXPECT_EQ(r["kind"], "lemma");
  EXPECT_EQ(r["estimate"], "inf");
  EXPECT_EQ(r["verdict"], "pass");
  EXPECT_EQ(r["parameters"][0][0], "n");
}

TEST(Coordinates, InsertionOrder) {
  const auto env = lattice(2, 3);
  Aggregate a(env, env.origin());
  a.settle(env, env.origin());
  a.settle(env, at(env, {0, 1}));
  std::stringstream out;
  write_coordinates(out, env, a, 5);
  std::string header, first, second;
  std::getline(out, header);
  std::getline(out, first);
  std::getline(out, second);
  EXPECT_NE(header.find("seed=5"), std::string::npos);
  EXPECT_EQ(first, "0 0");
  EXPECT_EQ(second, "0 1");
}

TEST(Format, RoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 6.02e23, -2.5}) EXPECT_EQ(std::stod(format_double(v)), v);
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
}
