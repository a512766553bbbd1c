#include "idla/environment.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include <json.hpp>

#include "idla/rng.hpp"

namespace idla {

std::string software_version() { return IDLA_LAB_VERSION; }

Vertex::Vertex(std::initializer_list<std::int32_t> coords) {
  if (coords.size() == 0 || coords.size() > kMaxDim) {
    throw std::invalid_argument("vertex dimension must be in [1, " + std::to_string(kMaxDim) + "]");
  }
  dim_ = static_cast<std::uint8_t>(coords.size());
  std::copy(coords.begin(), coords.end(), coords_.begin());
}

Vertex Vertex::origin(int dim) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("bad vertex dimension");
  return Vertex(dim);
}

std::string Vertex::to_string() const {
  std::string out = "(";
  for (int i = 0; i < dim_; ++i) {
    if (i) out += ",";
    out += std::to_string(coords_[i]);
  }
  return out + ")";
}

Environment Environment::generate(const EnvironmentParams& params) {
  if (params.dim < 1 || params.dim > kMaxDim) {
    throw std::invalid_argument("dimension must be in [1, " + std::to_string(kMaxDim) + "]");
  }
  if (params.half_extent < 1) throw std::invalid_argument("half extent must be >= 1");
  if (!(params.p > 0.0 && params.p <= 1.0)) throw std::invalid_argument("p must lie in (0, 1]");
  if (params.max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");

  const double sites = std::pow(2.0 * params.half_extent + 1.0, params.dim);
  if (sites > 2.0e8) throw std::invalid_argument("box too large");

  Environment env;
  env.dim_ = params.dim;
  env.half_extent_ = params.half_extent;
  env.side_ = 2 * params.half_extent + 1;
  env.p_ = params.p;
  env.requested_seed_ = params.seed;
  env.site_count_ = 1;
  for (int a = 0; a < env.dim_; ++a) {
    env.stride_[a] = env.site_count_;
    env.site_count_ *= static_cast<std::size_t>(env.side_);
  }
  env.origin_ = env.site_of(Vertex::origin(env.dim_));

  std::uint64_t seed = params.seed;
  for (int attempt = 1; attempt <= params.max_attempts; ++attempt) {
    env.attempts_ = attempt;
    if (env.sample(seed)) {
      env.accepted_seed_ = seed;
      return env;
    }
    seed += kSeedAdvance;
  }
  std::ostringstream msg;
  msg << "no environment with the origin cluster spanning the box after " << params.max_attempts
      << " attempts (d=" << params.dim << ", L=" << params.half_extent << ", p=" << params.p
      << "); p is likely at or below the percolation threshold for this box";
  throw RetryBudgetExhausted(msg.str());
}

bool Environment::sample(std::uint64_t seed) {
  const int L = half_extent_;
  open_.assign(site_count_ * dim_, 0);
  edge_count_ = 0;
  open_edge_count_ = 0;
  Stream stream(seed, StreamDomain::kEnvironment, 0, 0);
  for (Site s = 0; s < site_count_; ++s) {
    for (int a = 0; a < dim_; ++a) {
      if (coord(s, a) == L) continue;
      ++edge_count_;
      if (stream.uniform() < p_) {
        open_[static_cast<std::size_t>(s) * dim_ + a] = 1;
        ++open_edge_count_;
      }
    }
  }

  offsets_.assign(site_count_ + 1, 0);
  adjacency_.clear();
  adjacency_.reserve(open_edge_count_ * 2);
  masks_.assign(site_count_, 0);
  deltas_.fill(0);
  for (int a = 0; a < dim_; ++a) {
    deltas_[a] = -static_cast<std::int64_t>(stride_[a]);
    deltas_[2 * dim_ - 1 - a] = static_cast<std::int64_t>(stride_[a]);
  }
  for (Site s = 0; s < site_count_; ++s) {
    offsets_[s] = static_cast<std::uint32_t>(adjacency_.size());
    for (int a = 0; a < dim_; ++a) {
      if (coord(s, a) > -L) {
        const Site t = s - static_cast<Site>(stride_[a]);
        if (open_[static_cast<std::size_t>(t) * dim_ + a]) {
          adjacency_.push_back(t);
          masks_[s] |= static_cast<std::uint16_t>(1u << a);
        }
      }
    }
    for (int a = dim_ - 1; a >= 0; --a) {
      if (open_[static_cast<std::size_t>(s) * dim_ + a]) {
        adjacency_.push_back(s + static_cast<Site>(stride_[a]));
        masks_[s] |= static_cast<std::uint16_t>(1u << (2 * dim_ - 1 - a));
      }
    }
    masks_[s] |= static_cast<std::uint16_t>((adjacency_.size() - offsets_[s]) << 12);
  }
  offsets_[site_count_] = static_cast<std::uint32_t>(adjacency_.size());

  cluster_flag_.assign(site_count_, 0);
  cluster_.clear();
  std::deque<Site> queue{origin_};
  cluster_flag_[origin_] = 1;
  while (!queue.empty()) {
    const Site s = queue.front();
    queue.pop_front();
    cluster_.push_back(s);
    for (Site t : neighbors(s)) {
      if (!cluster_flag_[t]) {
        cluster_flag_[t] = 1;
        queue.push_back(t);
      }
    }
  }
  std::sort(cluster_.begin(), cluster_.end());
  return cluster_touches_all_faces();
}

bool Environment::in_box(const Vertex& v) const {
  if (v.dim() != dim_) return false;
  for (int a = 0; a < dim_; ++a) {
    if (v[a] < -half_extent_ || v[a] > half_extent_) return false;
  }
  return true;
}

Site Environment::site_of(const Vertex& v) const {
  if (v.dim() != dim_) throw std::invalid_argument("vertex dimension does not match environment");
  if (!in_box(v)) throw std::out_of_range("vertex " + v.to_string() + " lies outside the box");
  std::size_t index = 0;
  for (int a = 0; a < dim_; ++a) index += static_cast<std::size_t>(v[a] + half_extent_) * stride_[a];
  return static_cast<Site>(index);
}

Vertex Environment::vertex_of(Site s) const {
  Vertex v = Vertex::origin(dim_);
  for (int a = 0; a < dim_; ++a) v[a] = coord(s, a);
  return v;
}

std::int32_t Environment::coord(Site s, int axis) const {
  return static_cast<std::int32_t>((s / stride_[axis]) % static_cast<std::size_t>(side_)) -
         half_extent_;
}

std::int64_t Environment::dist2(Site a, Site b) const {
  std::int64_t sum = 0;
  for (int axis = 0; axis < dim_; ++axis) {
    const std::int64_t diff = coord(a, axis) - coord(b, axis);
    sum += diff * diff;
  }
  return sum;
}

bool Environment::on_box_boundary(Site s) const {
  for (int a = 0; a < dim_; ++a) {
    const auto c = coord(s, a);
    if (c == half_extent_ || c == -half_extent_) return true;
  }
  return false;
}

std::vector<Vertex> Environment::open_neighbors(const Vertex& v) const {
  std::vector<Vertex> out;
  for (Site t : neighbors(site_of(v))) out.push_back(vertex_of(t));
  return out;
}

bool Environment::edge_open(Site s, int axis) const {
  return open_[static_cast<std::size_t>(s) * dim_ + axis] != 0;
}

bool Environment::cluster_touches_all_faces() const {
  std::vector<std::uint8_t> low(dim_, 0), high(dim_, 0);
  for (Site s : cluster_) {
    for (int a = 0; a < dim_; ++a) {
      const auto c = coord(s, a);
      if (c == -half_extent_) low[a] = 1;
      if (c == half_extent_) high[a] = 1;
    }
  }
  for (int a = 0; a < dim_; ++a) {
    if (!low[a] || !high[a]) return false;
  }
  return true;
}

bool Environment::cluster_touches_boundary() const {
  return std::any_of(cluster_.begin(), cluster_.end(),
                     [this](Site s) { return on_box_boundary(s); });
}

std::size_t cluster_ball_count(const Environment& env, Site x, double r) {
  if (!env.in_cluster(x)) throw std::invalid_argument("ball centre must lie in the cluster");
  if (r < 0) throw std::invalid_argument("radius must be nonnegative");
  if (r == 0) return 0;
  const int d = env.dim();
  const int L = env.half_extent();
  const int reach = static_cast<int>(std::ceil(r));
  std::array<int, kMaxDim> lo{}, hi{}, cur{};
  for (int a = 0; a < d; ++a) {
    lo[a] = std::max(-L, env.coord(x, a) - reach);
    hi[a] = std::min(L, env.coord(x, a) + reach);
    cur[a] = lo[a];
  }
  std::size_t count = 0;
  Vertex v = Vertex::origin(d);
  for (;;) {
    std::int64_t d2 = 0;
    for (int a = 0; a < d; ++a) {
      v[a] = cur[a];
      const std::int64_t diff = cur[a] - env.coord(x, a);
      d2 += diff * diff;
    }
    if (std::sqrt(static_cast<double>(d2)) < r && env.in_cluster(env.site_of(v))) ++count;
    int a = 0;
    while (a < d && cur[a] == hi[a]) {
      cur[a] = lo[a];
      ++a;
    }
    if (a == d) break;
    ++cur[a];
  }
  return count;
}

std::size_t cluster_ball_count(const Environment& env, const Vertex& x, double r) {
  return cluster_ball_count(env, env.site_of(x), r);
}

double radius_for_count(const Environment& env, std::size_t count) {
  if (count == 0) return 0.0;
  if (count > env.cluster_size()) {
    throw std::invalid_argument("cluster holds fewer vertices than requested");
  }
  std::vector<std::int64_t> d2;
  d2.reserve(env.cluster_size());
  for (Site s : env.cluster_sites()) d2.push_back(env.dist2(s, env.origin()));
  std::nth_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(count - 1), d2.end());
  return std::sqrt(static_cast<double>(d2[count - 1]));
}

RunManifest RunManifest::describe(const Environment& env) {
  RunManifest m;
  m.dim = env.dim();
  m.half_extent = env.half_extent();
  m.p = env.p();
  m.seed = env.requested_seed();
  m.accepted_seed = env.accepted_seed();
  m.attempts = env.attempts();
  m.version = software_version();
  m.cluster_size = env.cluster_size();
  m.touches_boundary = env.cluster_touches_boundary();
  return m;
}

EnvironmentParams RunManifest::params() const {
  EnvironmentParams params;
  params.dim = dim;
  params.half_extent = half_extent;
  params.p = p;
  params.seed = seed;
  params.max_attempts = std::max(attempts, 1);
  return params;
}

std::string RunManifest::serialize() const {
  nlohmann::ordered_json j;
  j["format"] = "idla-lab-manifest";
  j["version"] = version;
  j["dim"] = dim;
  j["half_extent"] = half_extent;
  j["p"] = p;
  j["seed"] = seed;
  j["accepted_seed"] = accepted_seed;
  j["attempts"] = attempts;
  j["cluster_size"] = cluster_size;
  j["touches_boundary"] = touches_boundary;
  j["config"] = config;
  return j.dump(2) + "\n";
}

RunManifest RunManifest::parse(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(std::string("malformed manifest: ") + e.what());
  }
  if (j.value("format", "") != "idla-lab-manifest") {
    throw std::runtime_error("not an idla-lab manifest");
  }
  RunManifest m;
  try {
    m.version = j.at("version").get<std::string>();
    m.dim = j.at("dim").get<int>();
    m.half_extent = j.at("half_extent").get<int>();
    m.p = j.at("p").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.accepted_seed = j.at("accepted_seed").get<std::uint64_t>();
    m.attempts = j.at("attempts").get<int>();
    m.cluster_size = j.at("cluster_size").get<std::size_t>();
    m.touches_boundary = j.at("touches_boundary").get<bool>();
    m.config = j.value("config", std::map<std::string, std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("incomplete manifest: ") + e.what());
  }
  return m;
}

}  // namespace idla
