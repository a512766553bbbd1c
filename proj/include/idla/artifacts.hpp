#pragma once

// Output formats: stats files (JSON lines with a schema header), P6 rasters,
// coordinate lists and stage-trace tables. Every file names the root seed
// and the software version.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "idla/aggregate.hpp"
#include "idla/environment.hpp"
#include "idla/experiments.hpp"
#include "idla/metric.hpp"

namespace idla {

inline constexpr int kStatsSchemaVersion = 1;

using Record = nlohmann::ordered_json;

Record to_record(const ConditionReport& report);
Record to_record(const ShapeStats& stats);
Record to_record(const LemmaEstimate& estimate);
std::vector<Record> stage_records(const StageTrace& trace);

/// Stats file: one header line carrying the schema, seed, version and (only
/// there) a timestamp, followed by one record per line.
class StatsWriter {
 public:
  StatsWriter(std::ostream& out, std::uint64_t root_seed, const std::string& command,
              std::optional<std::string> timestamp);
  void write(const Record& record);

 private:
  std::ostream& out_;
};

std::string utc_timestamp();

/// Splits a stats file into its header and its record lines.
struct StatsFile {
  Record header;
  std::vector<std::string> rows;
};
StatsFile read_stats(std::istream& in);

enum class PixelClass { kAggregate, kCluster, kOffCluster };

struct Raster {
  int width = 0;
  int height = 0;
  std::string comment;
  std::vector<std::array<std::uint8_t, 3>> pixels;  // row-major, top row first

  std::array<std::uint8_t, 3> at(int col, int row) const { return pixels[row * width + col]; }
};

inline constexpr std::array<std::uint8_t, 3> kAggregateColor{255, 0, 0};
inline constexpr std::array<std::uint8_t, 3> kClusterColor{0, 255, 0};
inline constexpr std::array<std::uint8_t, 3> kOffClusterColor{0, 0, 255};

/// One pixel per site of the box (the slice through the origin for d >= 3).
/// Column c is x_0 = c - L; row r is x_1 = L - r.
Raster render_raster(const Environment& env, const Aggregate* aggregate, std::uint64_t root_seed);
void write_ppm(std::ostream& out, const Raster& raster);
Raster read_ppm(std::istream& in);

/// Lattice vertex shown at raster pixel (col, row).
Vertex raster_vertex(const Environment& env, int col, int row);

void write_coordinates(std::ostream& out, const Environment& env, const Aggregate& aggregate,
                       std::uint64_t root_seed);
void write_trace_csv(std::ostream& out, const StageTrace& trace, std::uint64_t root_seed);

/// Round-trip formatting for doubles ("inf" for infinity).
std::string format_double(double value);

}  // namespace idla
