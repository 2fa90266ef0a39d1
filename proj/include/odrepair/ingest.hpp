#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "odrepair/csv.hpp"
#include "odrepair/errors.hpp"
#include "odrepair/network.hpp"

namespace odrepair {

/* Loading, validating and writing the on-disk table formats.
 *
 * edge list       origin,dest,weight
 * correspondence  child,parent
 * populations     zone,count
 */

inline OdNetwork load_network(const std::filesystem::path& path, Level origin_level,
                              Level dest_level) {
  CsvFile file(path, 3);
  detail::require_header(file, {"origin", "dest", "weight"});
  OdNetwork net(origin_level, dest_level);
  std::vector<std::string> fields;
  while (file.next(fields)) {
    if (fields[0].empty() || fields[1].empty()) {
      throw data_error(file.path() + ":" + std::to_string(file.line()) +
                       ": empty zone code");
    }
    try {
      net.add_edge(fields[0], fields[1], file.parse_int(fields[2]));
    } catch (const data_error& e) {
      throw data_error(file.path() + ":" + std::to_string(file.line()) + ": " + e.what());
    }
  }
  return net;
}

inline void save_network(const OdNetwork& net, const std::filesystem::path& path,
                         std::string_view metadata_line = {}) {
  auto out = open_artifact(path, metadata_line);
  out << "origin,dest,weight\n";
  for (const auto& [key, w] : net.edges()) {
    out << key.first << ',' << key.second << ',' << w << '\n';
  }
  if (!out) throw data_error("write failed: " + path.string());
}

inline PopulationTable load_population(const std::filesystem::path& path, Level level) {
  CsvFile file(path, 2);
  detail::require_header(file, {"zone", "count"});
  PopulationTable table;
  table.level = level;
  std::vector<std::string> fields;
  while (file.next(fields)) {
    if (fields[0].empty()) {
      throw data_error(file.path() + ":" + std::to_string(file.line()) +
                       ": empty zone code");
    }
    const std::int64_t count = file.parse_int(fields[1]);
    if (count < 0) {
      throw data_error(file.path() + ":" + std::to_string(file.line()) +
                       ": negative count for zone " + fields[0]);
    }
    if (!table.counts.emplace(fields[0], count).second) {
      throw data_error(file.path() + ":" + std::to_string(file.line()) +
                       ": duplicate zone " + fields[0]);
    }
  }
  return table;
}

inline void save_population(const PopulationTable& table, const std::filesystem::path& path,
                            std::string_view metadata_line = {}) {
  auto out = open_artifact(path, metadata_line);
  out << "zone,count\n";
  for (const auto& [zone, count] : table.counts) out << zone << ',' << count << '\n';
  if (!out) throw data_error("write failed: " + path.string());
}

namespace detail {
inline void load_parent_map(const std::filesystem::path& path,
                            std::map<ZoneCode, ZoneCode>& out) {
  CsvFile file(path, 2);
  require_header(file, {"child", "parent"});
  std::vector<std::string> fields;
  while (file.next(fields)) {
    if (fields[0].empty() || fields[1].empty()) {
      throw data_error(file.path() + ":" + std::to_string(file.line()) +
                       ": empty zone code");
    }
    const auto [it, inserted] = out.emplace(fields[0], fields[1]);
    if (!inserted && it->second != fields[1]) {
      throw data_error(file.path() + ":" + std::to_string(file.line()) +
                       ": child " + fields[0] + " mapped to two parents");
    }
  }
}
}  // namespace detail

inline PartitionHierarchy load_hierarchy(const std::filesystem::path& origin_corr,
                                         const std::filesystem::path& dest_corr) {
  PartitionHierarchy h;
  detail::load_parent_map(origin_corr, h.origin_parent);
  detail::load_parent_map(dest_corr, h.dest_parent);
  return h;
}

inline void save_parent_map(const std::map<ZoneCode, ZoneCode>& parents,
                            const std::filesystem::path& path,
                            std::string_view metadata_line = {}) {
  auto out = open_artifact(path, metadata_line);
  out << "child,parent\n";
  for (const auto& [child, parent] : parents) out << child << ',' << parent << '\n';
  if (!out) throw data_error("write failed: " + path.string());
}

/* Census edge lists mix geographic destinations with bookkeeping categories
 * (no fixed workplace, worked from home, ...). Those rows are dropped before
 * any reconstruction and the removal is reported, never silent. */
struct PreprocessReport {
  std::int64_t edges_removed = 0;
  std::int64_t commuters_removed = 0;
  std::vector<ZoneCode> categories_matched;  // sorted, unique
};

inline std::pair<OdNetwork, PreprocessReport> strip_non_geographic(
    const OdNetwork& net, const std::set<ZoneCode>& blocklist) {
  OdNetwork kept(net.origin_level(), net.dest_level());
  PreprocessReport report;
  std::set<ZoneCode> matched;
  for (const auto& [key, w] : net.edges()) {
    const bool origin_blocked = blocklist.count(key.first) != 0;
    const bool dest_blocked = blocklist.count(key.second) != 0;
    if (origin_blocked || dest_blocked) {
      ++report.edges_removed;
      report.commuters_removed += w;
      if (origin_blocked) matched.insert(key.first);
      if (dest_blocked) matched.insert(key.second);
    } else {
      kept.add_edge(key.first, key.second, w);
    }
  }
  report.categories_matched.assign(matched.begin(), matched.end());
  return {std::move(kept), std::move(report)};
}

}  // namespace odrepair
