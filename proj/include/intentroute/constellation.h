#ifndef INTENTROUTE_CONSTELLATION_H_
#define INTENTROUTE_CONSTELLATION_H_

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace intentroute {

using NodeId = std::int32_t;
using EdgeId = std::int32_t;

inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kEarthMuKm3PerS2 = 398600.4418;
inline constexpr double kSpeedOfLightKmPerMs = 299.792458;
inline constexpr double kSiderealDayS = 86164.0;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unknown region, out-of-range node, and similar lookups.
class EntityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct WalkerConfig {
  int planes = 20;
  int sats_per_plane = 20;
  double altitude_km = 550.0;
  double inclination_deg = 53.0;
  int phasing_factor = 1;
  bool earth_rotation = true;
  double epoch_offset_s = 0.0;

  int node_count() const { return planes * sats_per_plane; }
  // Throws ConfigError when an invariant does not hold.
  void validate() const;
};

// Accepts either a JSON object or `key = value` lines (`#` comments).
WalkerConfig parse_walker_config(std::string_view text);
WalkerConfig load_walker_config(const std::string& path);

struct SatelliteState {
  NodeId node_id = 0;
  int plane = 0;
  int slot = 0;
  double latitude_deg = 0.0;
  double longitude_deg = 0.0;
  double altitude_km = 0.0;
  std::array<double, 3> ecef_km{};
};

struct Isl {
  NodeId u = 0;  // u < v
  NodeId v = 0;
  double delay_ms = 0.0;
  double capacity = 1.0;
  bool inter_plane = false;
};

struct Neighbor {
  NodeId node = 0;
  EdgeId edge = 0;
};

struct Region {
  std::string name;
  double lat_min = -90.0;
  double lat_max = 90.0;
  // lon_min > lon_max denotes a box that wraps across the antimeridian.
  double lon_min = -180.0;
  double lon_max = 180.0;

  bool contains(double lat_deg, double lon_deg) const;
};

class RegionCatalog {
 public:
  RegionCatalog() = default;
  explicit RegionCatalog(std::vector<Region> regions);

  // JSON document {"version": n, "regions": [{name, lat_min, ...}, ...]}.
  static RegionCatalog parse(std::string_view json_text);
  static const RegionCatalog& builtin();

  const Region* find(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }
  const std::vector<Region>& regions() const { return regions_; }
  int version() const { return version_; }

 private:
  std::vector<Region> regions_;
  int version_ = 1;
};

class TopologySnapshot {
 public:
  TopologySnapshot(WalkerConfig config, double time_s,
                   std::vector<SatelliteState> nodes, std::vector<Isl> edges,
                   std::shared_ptr<const RegionCatalog> regions);

  const WalkerConfig& config() const { return config_; }
  double time_s() const { return time_s_; }
  int node_count() const { return static_cast<int>(nodes_.size()); }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<SatelliteState>& nodes() const { return nodes_; }
  const SatelliteState& node(NodeId id) const { return nodes_.at(id); }
  const std::vector<Isl>& edges() const { return edges_; }
  const Isl& edge(EdgeId id) const { return edges_.at(id); }
  const std::vector<Neighbor>& neighbors(NodeId id) const {
    return adjacency_.at(id);
  }
  std::optional<EdgeId> find_edge(NodeId a, NodeId b) const;
  const RegionCatalog& regions() const { return *regions_; }

  int plane_of(NodeId id) const { return id / config_.sats_per_plane; }
  bool valid_node(long long id) const {
    return id >= 0 && id < static_cast<long long>(nodes_.size());
  }
  double min_edge_delay_ms() const;

 private:
  WalkerConfig config_;
  double time_s_;
  std::vector<SatelliteState> nodes_;
  std::vector<Isl> edges_;
  std::vector<std::vector<Neighbor>> adjacency_;
  std::shared_ptr<const RegionCatalog> regions_;
};

TopologySnapshot build_snapshot(
    const WalkerConfig& config, double time_s,
    std::shared_ptr<const RegionCatalog> regions = nullptr);

// Sorted ascending. Throws EntityError for a name missing from the
// snapshot's catalog.
std::vector<NodeId> region_nodes(const TopologySnapshot& snapshot,
                                 std::string_view region_name);
std::vector<NodeId> region_nodes(const TopologySnapshot& snapshot,
                                 const Region& region);

std::optional<int> min_hop_distance(const TopologySnapshot& snapshot,
                                    NodeId src, NodeId dst);

}  // namespace intentroute

#endif  // INTENTROUTE_CONSTELLATION_H_
