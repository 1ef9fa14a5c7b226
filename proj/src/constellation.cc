#include "intentroute/constellation.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <queue>
#include <sstream>

#include "embedded_data.h"
#include "json.hpp"

namespace intentroute {
namespace {

using nlohmann::json;

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

double normalize_lon_deg(double lon) {
  lon = std::fmod(lon + 180.0, 360.0);
  if (lon < 0) lon += 360.0;
  return lon - 180.0;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': expected boolean, got '" + v +
                    "'");
}

void assign_key(WalkerConfig& cfg, const std::string& key,
                const std::string& value) {
  try {
    std::size_t used = 0;
    auto whole = [&](std::size_t n) {
      if (n != value.size()) throw std::invalid_argument(value);
    };
    if (key == "planes") {
      cfg.planes = std::stoi(value, &used);
      whole(used);
    } else if (key == "sats_per_plane") {
      cfg.sats_per_plane = std::stoi(value, &used);
      whole(used);
    } else if (key == "altitude_km") {
      cfg.altitude_km = std::stod(value, &used);
      whole(used);
    } else if (key == "inclination_deg") {
      cfg.inclination_deg = std::stod(value, &used);
      whole(used);
    } else if (key == "phasing_factor") {
      cfg.phasing_factor = std::stoi(value, &used);
      whole(used);
    } else if (key == "earth_rotation") {
      cfg.earth_rotation = parse_bool(key, value);
    } else if (key == "epoch_offset_s") {
      cfg.epoch_offset_s = std::stod(value, &used);
      whole(used);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const std::invalid_argument&) {
    throw ConfigError("config key '" + key + "': malformed value '" + value +
                      "'");
  } catch (const std::out_of_range&) {
    throw ConfigError("config key '" + key + "': value out of range");
  }
}

}  // namespace

void WalkerConfig::validate() const {
  if (planes < 1) throw ConfigError("planes must be >= 1");
  if (sats_per_plane < 1) throw ConfigError("sats_per_plane must be >= 1");
  if (!(altitude_km > 0.0) || !std::isfinite(altitude_km))
    throw ConfigError("altitude_km must be > 0");
  if (!(inclination_deg > 0.0 && inclination_deg <= 180.0))
    throw ConfigError("inclination_deg must be in (0, 180]");
  if (!std::isfinite(epoch_offset_s))
    throw ConfigError("epoch_offset_s must be finite");
}

WalkerConfig parse_walker_config(std::string_view text) {
  WalkerConfig cfg;
  std::string body = trim(text);
  if (!body.empty() && body.front() == '{') {
    json doc;
    try {
      doc = json::parse(body);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("malformed JSON config: ") + e.what());
    }
    for (const auto& [key, value] : doc.items()) {
      std::string v = value.is_string() ? value.get<std::string>()
                                        : value.dump();
      assign_key(cfg, key, v);
    }
  } else {
    std::istringstream in(body);
    std::string line;
    while (std::getline(in, line)) {
      if (auto hash = line.find('#'); hash != std::string::npos)
        line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      auto eq = line.find_first_of("=:");
      if (eq == std::string::npos)
        throw ConfigError("config line without '=': " + line);
      assign_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
  }
  cfg.validate();
  return cfg;
}

WalkerConfig load_walker_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_walker_config(buf.str());
}

bool Region::contains(double lat_deg, double lon_deg) const {
  if (lat_deg < lat_min || lat_deg > lat_max) return false;
  if (lon_min <= lon_max) return lon_deg >= lon_min && lon_deg <= lon_max;
  return lon_deg >= lon_min || lon_deg <= lon_max;
}

RegionCatalog::RegionCatalog(std::vector<Region> regions)
    : regions_(std::move(regions)) {
  for (std::size_t i = 0; i < regions_.size(); ++i)
    for (std::size_t j = i + 1; j < regions_.size(); ++j)
      if (regions_[i].name == regions_[j].name)
        throw ConfigError("duplicate region name " + regions_[i].name);
}

RegionCatalog RegionCatalog::parse(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed region catalog: ") + e.what());
  }
  std::vector<Region> regions;
  try {
    for (const auto& row : doc.at("regions")) {
      Region r;
      r.name = row.at("name").get<std::string>();
      r.lat_min = row.at("lat_min").get<double>();
      r.lat_max = row.at("lat_max").get<double>();
      r.lon_min = row.at("lon_min").get<double>();
      r.lon_max = row.at("lon_max").get<double>();
      if (r.lat_min > r.lat_max)
        throw ConfigError("region " + r.name + ": lat_min > lat_max");
      regions.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("region catalog schema: ") + e.what());
  }
  RegionCatalog catalog(std::move(regions));
  catalog.version_ = doc.value("version", 1);
  return catalog;
}

const RegionCatalog& RegionCatalog::builtin() {
  static const RegionCatalog catalog = parse(embedded::kRegionsJson);
  return catalog;
}

const Region* RegionCatalog::find(std::string_view name) const {
  for (const auto& r : regions_)
    if (r.name == name) return &r;
  return nullptr;
}

TopologySnapshot::TopologySnapshot(WalkerConfig config, double time_s,
                                   std::vector<SatelliteState> nodes,
                                   std::vector<Isl> edges,
                                   std::shared_ptr<const RegionCatalog> regions)
    : config_(config),
      time_s_(time_s),
      nodes_(std::move(nodes)),
      edges_(std::move(edges)),
      adjacency_(nodes_.size()),
      regions_(std::move(regions)) {
  for (EdgeId e = 0; e < static_cast<EdgeId>(edges_.size()); ++e) {
    adjacency_[edges_[e].u].push_back({edges_[e].v, e});
    adjacency_[edges_[e].v].push_back({edges_[e].u, e});
  }
  for (auto& list : adjacency_)
    std::sort(list.begin(), list.end(),
              [](const Neighbor& a, const Neighbor& b) {
                return a.node < b.node;
              });
}

std::optional<EdgeId> TopologySnapshot::find_edge(NodeId a, NodeId b) const {
  if (!valid_node(a) || !valid_node(b)) return std::nullopt;
  for (const auto& n : adjacency_[a])
    if (n.node == b) return n.edge;
  return std::nullopt;
}

double TopologySnapshot::min_edge_delay_ms() const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : edges_) best = std::min(best, e.delay_ms);
  return best;
}

TopologySnapshot build_snapshot(const WalkerConfig& config, double time_s,
                                std::shared_ptr<const RegionCatalog> regions) {
  config.validate();
  if (!std::isfinite(time_s)) throw ConfigError("time_s must be finite");
  if (!regions)
    regions = std::shared_ptr<const RegionCatalog>(
        &RegionCatalog::builtin(), [](const RegionCatalog*) {});

  const int P = config.planes;
  const int S = config.sats_per_plane;
  const double a = kEarthRadiusKm + config.altitude_km;
  const double mean_motion = std::sqrt(kEarthMuKm3PerS2 / (a * a * a));
  const double inc = config.inclination_deg * kDegToRad;
  const double t = time_s + config.epoch_offset_s;
  const double earth_angle =
      config.earth_rotation ? 2.0 * std::numbers::pi / kSiderealDayS * t : 0.0;
  const double cos_e = std::cos(earth_angle);
  const double sin_e = std::sin(earth_angle);

  std::vector<SatelliteState> nodes;
  nodes.reserve(static_cast<std::size_t>(P) * S);
  for (int p = 0; p < P; ++p) {
    const double raan = 2.0 * std::numbers::pi * p / P;
    for (int s = 0; s < S; ++s) {
      const double u = 2.0 * std::numbers::pi * s / S + mean_motion * t +
                       config.phasing_factor * 2.0 * std::numbers::pi * p /
                           (static_cast<double>(P) * S);
      const double x = a * (std::cos(raan) * std::cos(u) -
                            std::sin(raan) * std::sin(u) * std::cos(inc));
      const double y = a * (std::sin(raan) * std::cos(u) +
                            std::cos(raan) * std::sin(u) * std::cos(inc));
      const double z = a * std::sin(u) * std::sin(inc);
      SatelliteState st;
      st.node_id = p * S + s;
      st.plane = p;
      st.slot = s;
      st.altitude_km = config.altitude_km;
      // ECI -> ECEF: rotate by -earth_angle about z.
      st.ecef_km = {x * cos_e + y * sin_e, -x * sin_e + y * cos_e, z};
      st.latitude_deg =
          std::asin(std::clamp(std::sin(inc) * std::sin(u), -1.0, 1.0)) *
          kRadToDeg;
      st.longitude_deg = normalize_lon_deg(
          std::atan2(st.ecef_km[1], st.ecef_km[0]) * kRadToDeg);
      nodes.push_back(st);
    }
  }

  std::vector<Isl> edges;
  edges.reserve(static_cast<std::size_t>(P) * S * 2);
  std::vector<std::vector<NodeId>> seen(nodes.size());
  auto add = [&](NodeId x, NodeId y, bool inter) {
    if (x == y) return;
    NodeId u = std::min(x, y), v = std::max(x, y);
    if (std::find(seen[u].begin(), seen[u].end(), v) != seen[u].end()) return;
    seen[u].push_back(v);
    const auto& pu = nodes[u].ecef_km;
    const auto& pv = nodes[v].ecef_km;
    const double dist = std::hypot(pu[0] - pv[0], pu[1] - pv[1], pu[2] - pv[2]);
    edges.push_back({u, v, dist / kSpeedOfLightKmPerMs, 1.0, inter});
  };
  for (int p = 0; p < P; ++p) {
    for (int s = 0; s < S; ++s) {
      const NodeId id = p * S + s;
      add(id, p * S + (s + 1) % S, false);
      add(id, ((p + 1) % P) * S + s, true);
    }
  }
  return TopologySnapshot(config, time_s, std::move(nodes), std::move(edges),
                          std::move(regions));
}

std::vector<NodeId> region_nodes(const TopologySnapshot& snapshot,
                                 const Region& region) {
  std::vector<NodeId> out;
  for (const auto& n : snapshot.nodes())
    if (region.contains(n.latitude_deg, n.longitude_deg))
      out.push_back(n.node_id);
  return out;
}

std::vector<NodeId> region_nodes(const TopologySnapshot& snapshot,
                                 std::string_view region_name) {
  const Region* r = snapshot.regions().find(region_name);
  if (!r) throw EntityError("unknown region '" + std::string(region_name) + "'");
  return region_nodes(snapshot, *r);
}

std::optional<int> min_hop_distance(const TopologySnapshot& snapshot,
                                    NodeId src, NodeId dst) {
  if (!snapshot.valid_node(src) || !snapshot.valid_node(dst))
    throw EntityError("node id out of range");
  if (src == dst) return 0;
  std::vector<int> dist(snapshot.node_count(), -1);
  std::queue<NodeId> q;
  dist[src] = 0;
  q.push(src);
  while (!q.empty()) {
    NodeId v = q.front();
    q.pop();
    for (const auto& n : snapshot.neighbors(v)) {
      if (dist[n.node] >= 0) continue;
      dist[n.node] = dist[v] + 1;
      if (n.node == dst) return dist[n.node];
      q.push(n.node);
    }
  }
  return std::nullopt;
}

}  // namespace intentroute
