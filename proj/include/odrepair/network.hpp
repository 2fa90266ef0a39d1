#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "odrepair/errors.hpp"

namespace odrepair {

/* Core origin/destination network model.
 *
 * Zones live at one of three levels: fine origin zones (small residential
 * areas), fine destination zones (small workplace areas), and coarse zones
 * (the common parent level of both). A network is a weighted directed edge
 * list between two levels; weights are commuter counts and stay integral
 * throughout so that budget arithmetic is exact.
 */

enum class Level { FineOrigin, FineDest, Coarse };

inline std::string_view level_name(Level level) {
  switch (level) {
    case Level::FineOrigin: return "fine-origin";
    case Level::FineDest: return "fine-dest";
    case Level::Coarse: return "coarse";
  }
  return "?";
}

using ZoneCode = std::string;
using EdgeKey = std::pair<ZoneCode, ZoneCode>;
using EdgeSet = std::set<EdgeKey>;

// Smallest count the survey disclosure protocol ever publishes; cells below
// this are suppressed at the source, so no reconstruction step may emit one.
inline constexpr std::int64_t kMinCellWeight = 3;

class OdNetwork {
 public:
  OdNetwork(Level origin_level, Level dest_level)
      : origin_level_(origin_level), dest_level_(dest_level) {}

  Level origin_level() const { return origin_level_; }
  Level dest_level() const { return dest_level_; }

  // Inserts a new edge; duplicates and non-positive weights are input errors.
  void add_edge(const ZoneCode& origin, const ZoneCode& dest, std::int64_t weight) {
    if (weight < 1) {
      throw data_error("edge " + origin + "->" + dest + " has non-positive weight " +
                       std::to_string(weight));
    }
    auto [it, inserted] = edges_.emplace(EdgeKey{origin, dest}, weight);
    if (!inserted) throw data_error("duplicate edge " + origin + "->" + dest);
    total_ += weight;
  }

  // Accumulates weight onto an edge, creating it if absent.
  void merge_edge(const ZoneCode& origin, const ZoneCode& dest, std::int64_t weight) {
    if (weight < 1) {
      throw data_error("edge " + origin + "->" + dest + " merged with non-positive weight " +
                       std::to_string(weight));
    }
    edges_[EdgeKey{origin, dest}] += weight;
    total_ += weight;
  }

  bool has_edge(const ZoneCode& origin, const ZoneCode& dest) const {
    return edges_.count(EdgeKey{origin, dest}) != 0;
  }

  std::int64_t weight_or(const ZoneCode& origin, const ZoneCode& dest,
                         std::int64_t fallback = 0) const {
    const auto it = edges_.find(EdgeKey{origin, dest});
    return it == edges_.end() ? fallback : it->second;
  }

  std::int64_t weight_or(const EdgeKey& key, std::int64_t fallback = 0) const {
    const auto it = edges_.find(key);
    return it == edges_.end() ? fallback : it->second;
  }

  // Sorted by (origin, dest); iteration order is deterministic.
  const std::map<EdgeKey, std::int64_t>& edges() const { return edges_; }

  std::size_t edge_count() const { return edges_.size(); }
  std::int64_t total_commuters() const { return total_; }

  EdgeSet key_set() const {
    EdgeSet keys;
    for (const auto& [key, w] : edges_) keys.insert(keys.end(), key);
    return keys;
  }

 private:
  Level origin_level_;
  Level dest_level_;
  std::map<EdgeKey, std::int64_t> edges_;
  std::int64_t total_ = 0;
};

/* Total child->parent maps for both fine levels. Every fine zone code that
 * appears anywhere must resolve to a coarse parent; a miss is a data error
 * naming the offending code. */
struct PartitionHierarchy {
  std::map<ZoneCode, ZoneCode> origin_parent;  // fine origin -> coarse
  std::map<ZoneCode, ZoneCode> dest_parent;    // fine dest   -> coarse

  const ZoneCode& parent_of(const ZoneCode& code, Level level) const {
    if (level == Level::Coarse) return code;  // already at the parent level
    const auto& table = level == Level::FineOrigin ? origin_parent : dest_parent;
    const auto it = table.find(code);
    if (it == table.end()) {
      throw data_error("zone " + code + " (" + std::string(level_name(level)) +
                       ") has no parent in the hierarchy");
    }
    return it->second;
  }
};

struct PopulationTable {
  Level level = Level::FineOrigin;
  std::map<ZoneCode, std::int64_t> counts;

  std::int64_t total() const {
    std::int64_t sum = 0;
    for (const auto& [zone, n] : counts) sum += n;
    return sum;
  }
};

// Maps both endpoints to their coarse parents and folds weights. Coarse
// endpoints pass through unchanged, so aggregating twice is a no-op.
inline OdNetwork aggregate(const OdNetwork& net, const PartitionHierarchy& hierarchy) {
  OdNetwork out(Level::Coarse, Level::Coarse);
  for (const auto& [key, w] : net.edges()) {
    out.merge_edge(hierarchy.parent_of(key.first, net.origin_level()),
                   hierarchy.parent_of(key.second, net.dest_level()), w);
  }
  return out;
}

// Folds only the origin side; destinations keep their level. Produces the
// mixed-resolution view (coarse origins, fine destinations).
inline OdNetwork aggregate_origins(const OdNetwork& net, const PartitionHierarchy& hierarchy) {
  OdNetwork out(Level::Coarse, net.dest_level());
  for (const auto& [key, w] : net.edges()) {
    out.merge_edge(hierarchy.parent_of(key.first, net.origin_level()), key.second, w);
  }
  return out;
}

inline void require_same_levels(const OdNetwork& a, const OdNetwork& b,
                                std::string_view op) {
  if (a.origin_level() != b.origin_level() || a.dest_level() != b.dest_level()) {
    throw data_error(std::string(op) + ": networks have different levels (" +
                     std::string(level_name(a.origin_level())) + "->" +
                     std::string(level_name(a.dest_level())) + " vs " +
                     std::string(level_name(b.origin_level())) + "->" +
                     std::string(level_name(b.dest_level())) + ")");
  }
}

inline EdgeSet edge_intersection(const OdNetwork& a, const OdNetwork& b) {
  require_same_levels(a, b, "edge_intersection");
  const OdNetwork& small = a.edge_count() <= b.edge_count() ? a : b;
  const OdNetwork& large = a.edge_count() <= b.edge_count() ? b : a;
  EdgeSet out;
  for (const auto& [key, w] : small.edges()) {
    if (large.weight_or(key) != 0) out.insert(out.end(), key);
  }
  return out;
}

// Keys present in a but not in b.
inline EdgeSet edge_complement(const OdNetwork& a, const OdNetwork& b) {
  require_same_levels(a, b, "edge_complement");
  EdgeSet out;
  for (const auto& [key, w] : a.edges()) {
    if (!b.has_edge(key.first, key.second)) out.insert(out.end(), key);
  }
  return out;
}

// Weights of `net` looked up over an explicit key set (0 where absent),
// in the set's sorted order.
inline std::vector<std::int64_t> weights_on(const EdgeSet& keys, const OdNetwork& net) {
  std::vector<std::int64_t> out;
  out.reserve(keys.size());
  for (const auto& key : keys) out.push_back(net.weight_or(key));
  return out;
}

// Pairwise differences a - b over a key set, in the set's sorted order.
inline std::vector<std::int64_t> weight_discrepancies(const EdgeSet& keys,
                                                      const OdNetwork& a,
                                                      const OdNetwork& b) {
  std::vector<std::int64_t> out;
  out.reserve(keys.size());
  for (const auto& key : keys) out.push_back(a.weight_or(key) - b.weight_or(key));
  return out;
}

inline std::map<ZoneCode, std::int64_t> out_strengths(const OdNetwork& net) {
  std::map<ZoneCode, std::int64_t> out;
  for (const auto& [key, w] : net.edges()) out[key.first] += w;
  return out;
}

inline std::map<ZoneCode, std::int64_t> in_strengths(const OdNetwork& net) {
  std::map<ZoneCode, std::int64_t> out;
  for (const auto& [key, w] : net.edges()) out[key.second] += w;
  return out;
}

// Sub-network on the given keys (edges absent from `net` are skipped).
inline OdNetwork restrict_to(const OdNetwork& net, const EdgeSet& keys) {
  OdNetwork out(net.origin_level(), net.dest_level());
  for (const auto& key : keys) {
    const std::int64_t w = net.weight_or(key);
    if (w != 0) out.add_edge(key.first, key.second, w);
  }
  return out;
}

}  // namespace odrepair
