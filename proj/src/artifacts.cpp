#include "idla/artifacts.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace idla {

std::string format_double(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

namespace {

nlohmann::ordered_json coords(const Vertex& v) {
  auto arr = nlohmann::ordered_json::array();
  for (int a = 0; a < v.dim(); ++a) arr.push_back(v[a]);
  return arr;
}

nlohmann::ordered_json sample_json(const ConditionSample& s, bool with_y) {
  nlohmann::ordered_json j;
  j["x"] = coords(s.x);
  if (with_y) j["y"] = coords(s.y);
  j["radius"] = s.radius;
  j["measured"] = s.measured;
  j["bound"] = s.bound;
  return j;
}

const char* relation_name(Relation r) {
  switch (r) {
    case Relation::kAtLeast: return ">=";
    case Relation::kAbove: return ">";
    case Relation::kAtMost: return "<=";
    case Relation::kBelow: return "<";
  }
  return "?";
}

// JSON has no infinities; keep them readable and lossless.
nlohmann::ordered_json number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

}  // namespace

Record to_record(const ConditionReport& report) {
  Record r;
  r["kind"] = "condition";
  r["condition"] = report.condition;
  r["seed"] = report.seed;
  r["fitted_c"] = number(report.fitted_c);
  if (report.condition == "VG") r["exponent"] = report.exponent;
  r["tolerance"] = report.tolerance;
  r["sample_count"] = report.samples.size();
  const bool with_y = report.condition == "C";
  auto samples = nlohmann::ordered_json::array();
  for (const auto& s : report.samples) samples.push_back(sample_json(s, with_y));
  auto violations = nlohmann::ordered_json::array();
  for (const auto& s : report.violations) violations.push_back(sample_json(s, with_y));
  r["violations"] = violations;
  r["samples"] = samples;
  r["pass"] = report.pass;
  return r;
}

Record to_record(const ShapeStats& stats) {
  Record r;
  r["kind"] = "shape";
  r["n"] = stats.n;
  r["replicas"] = stats.replicas;
  r["particles"] = stats.particles;
  r["in_ratio_median"] = stats.in_ratio_median;
  r["in_ratio_q05"] = stats.in_ratio_q05;
  r["in_ratio_q95"] = stats.in_ratio_q95;
  r["out_ratio_median"] = stats.out_ratio_median;
  r["out_ratio_q05"] = stats.out_ratio_q05;
  r["out_ratio_q95"] = stats.out_ratio_q95;
  r["boundary_contacts"] = stats.boundary_contacts;
  std::size_t broken = 0;
  for (const auto& c : stats.conservation) broken += c.holds() ? 0 : 1;
  r["conservation_failures"] = broken;
  r["inradius"] = stats.inradius;
  r["outradius"] = stats.outradius;
  return r;
}

Record to_record(const LemmaEstimate& estimate) {
  Record r;
  r["kind"] = "lemma";
  r["lemma"] = estimate.lemma;
  auto params = nlohmann::ordered_json::array();
  for (const auto& [k, v] : estimate.parameters) params.push_back({k, number(v)});
  r["parameters"] = params;
  r["estimate"] = number(estimate.estimate);
  r["half_width"] = number(estimate.half_width);
  r["samples"] = estimate.samples;
  r["relation"] = relation_name(estimate.relation);
  r["bound"] = number(estimate.bound);
  r["verdict"] = estimate.verdict ? "pass" : "fail";
  auto details = nlohmann::ordered_json::array();
  for (const auto& [k, v] : estimate.details) details.push_back({k, number(v)});
  r["details"] = details;
  return r;
}

std::vector<Record> stage_records(const StageTrace& trace) {
  std::vector<Record> rows;
  for (const Stage& s : trace.stages) {
    Record r;
    r["kind"] = "stage";
    r["j"] = s.index;
    r["n_j"] = number(s.radius);
    r["k_j"] = s.paused;
    r["settled"] = s.settled;
    rows.push_back(std::move(r));
  }
  Record summary;
  summary["kind"] = "stage_summary";
  summary["terminal_stage"] = trace.terminal;
  summary["final_radius"] = trace.final_radius;
  summary["small_count_bound"] = trace.small_count_bound;
  summary["released"] = trace.released;
  rows.push_back(std::move(summary));
  return rows;
}

StatsWriter::StatsWriter(std::ostream& out, std::uint64_t root_seed, const std::string& command,
                         std::optional<std::string> timestamp)
    : out_(out) {
  Record header;
  header["schema"] = "idla-lab-stats";
  header["schema_version"] = kStatsSchemaVersion;
  header["software_version"] = software_version();
  header["root_seed"] = root_seed;
  header["command"] = command;
  if (timestamp) header["timestamp"] = *timestamp;
  out_ << header.dump() << "\n";
}

void StatsWriter::write(const Record& record) { out_ << record.dump() << "\n"; }

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

StatsFile read_stats(std::istream& in) {
  StatsFile file;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("stats file is empty");
  file.header = Record::parse(line);
  if (file.header.value("schema", "") != "idla-lab-stats") {
    throw std::runtime_error("not an idla-lab stats file");
  }
  while (std::getline(in, line)) {
    if (!line.empty()) file.rows.push_back(line);
  }
  return file;
}

Vertex raster_vertex(const Environment& env, int col, int row) {
  Vertex v = Vertex::origin(env.dim());
  const int L = env.half_extent();
  v[0] = col - L;
  if (env.dim() >= 2) v[1] = L - row;
  return v;
}

Raster render_raster(const Environment& env, const Aggregate* aggregate, std::uint64_t root_seed) {
  Raster raster;
  raster.width = env.side();
  raster.height = env.dim() >= 2 ? env.side() : 1;
  raster.comment = "idla-lab " + software_version() + " seed=" + std::to_string(root_seed) +
                   (env.dim() > 2 ? " slice=origin" : "");
  raster.pixels.reserve(static_cast<std::size_t>(raster.width) * raster.height);
  for (int row = 0; row < raster.height; ++row) {
    for (int col = 0; col < raster.width; ++col) {
      const Site s = env.site_of(raster_vertex(env, col, row));
      if (aggregate && aggregate->contains(s)) {
        raster.pixels.push_back(kAggregateColor);
      } else if (env.in_cluster(s)) {
        raster.pixels.push_back(kClusterColor);
      } else {
        raster.pixels.push_back(kOffClusterColor);
      }
    }
  }
  return raster;
}

void write_ppm(std::ostream& out, const Raster& raster) {
  out << "P6\n# " << raster.comment << "\n" << raster.width << " " << raster.height << "\n255\n";
  for (const auto& px : raster.pixels) out.write(reinterpret_cast<const char*>(px.data()), 3);
}

Raster read_ppm(std::istream& in) {
  Raster raster;
  std::string magic;
  in >> magic;
  if (magic != "P6") throw std::runtime_error("not a P6 pixmap");
  auto skip = [&] {
    for (;;) {
      in >> std::ws;
      if (in.peek() != '#') return;
      std::string comment;
      std::getline(in, comment);
      if (raster.comment.empty()) raster.comment = comment.substr(comment.find_first_not_of("# "));
    }
  };
  int maxval = 0;
  skip();
  in >> raster.width;
  skip();
  in >> raster.height;
  skip();
  in >> maxval;
  if (!in || maxval != 255 || raster.width <= 0 || raster.height <= 0) {
    throw std::runtime_error("unsupported pixmap header");
  }
  in.get();
  raster.pixels.resize(static_cast<std::size_t>(raster.width) * raster.height);
  for (auto& px : raster.pixels) {
    in.read(reinterpret_cast<char*>(px.data()), 3);
  }
  if (!in) throw std::runtime_error("truncated pixmap");
  return raster;
}

void write_coordinates(std::ostream& out, const Environment& env, const Aggregate& aggregate,
                       std::uint64_t root_seed) {
  out << "# idla-lab " << software_version() << " seed=" << root_seed
      << " sites=" << aggregate.size() << " (insertion order)\n";
  for (Site s : aggregate.history()) {
    const Vertex v = env.vertex_of(s);
    for (int a = 0; a < v.dim(); ++a) out << (a ? " " : "") << v[a];
    out << "\n";
  }
}

void write_trace_csv(std::ostream& out, const StageTrace& trace, std::uint64_t root_seed) {
  out << "# idla-lab " << software_version() << " seed=" << root_seed << "\n";
  out << "j,n_j,k_j,settled\n";
  for (const Stage& s : trace.stages) {
    out << s.index << "," << format_double(s.radius) << "," << s.paused << "," << s.settled << "\n";
  }
}

}  // namespace idla
