#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "odrepair/csv.hpp"
#include "odrepair/dist.hpp"
#include "odrepair/errors.hpp"
#include "odrepair/network.hpp"
#include "odrepair/rng.hpp"

namespace odrepair {

/* Candidate edges.
 *
 * For every fine origin zone the released fine network under-counts its
 * residents; the shortfall is materialized as a multiset of (origin, weight)
 * stubs with weights drawn from the population-conditioned distribution.
 * Destinations are chosen later, under budget constraints.
 */

struct CandidateEdge {
  ZoneCode origin;
  std::int64_t weight = 0;
};

inline bool operator==(const CandidateEdge& a, const CandidateEdge& b) {
  return a.origin == b.origin && a.weight == b.weight;
}

struct DeficitTable {
  // origin zone -> residents still unaccounted for (population minus
  // released out-strength); negative values are kept, they mark zones
  // whose release over-counts and they never generate candidates.
  std::map<ZoneCode, std::int64_t> deficits;
};

inline DeficitTable compute_deficits(const OdNetwork& fine,
                                     const PopulationTable& origin_pop) {
  const auto strengths = out_strengths(fine);
  for (const auto& [zone, s] : strengths) {
    if (origin_pop.counts.find(zone) == origin_pop.counts.end()) {
      throw data_error("origin " + zone + " appears in the fine network but not in the population table");
    }
  }
  DeficitTable table;
  for (const auto& [zone, n] : origin_pop.counts) {
    const auto it = strengths.find(zone);
    table.deficits[zone] = n - (it == strengths.end() ? 0 : it->second);
  }
  return table;
}

/* Splits each deficit into weights >= kMinCellWeight sampled from the
 * reference distribution, truncated to what remains of the deficit. A
 * residue below kMinCellWeight is left unassigned — cells that small are
 * never published, so they are not reconstructable either.
 *
 * Each origin draws from its own seed-derived stream, so the candidate list
 * for one zone is independent of which other zones are processed. Output is
 * canonical: sorted by origin, then weight. */
inline std::vector<CandidateEdge> generate_candidates(
    const DeficitTable& deficits, const ConditionalWeightDistribution& dist,
    const PopulationTable& origin_pop, std::uint64_t seed) {
  std::vector<CandidateEdge> out;
  for (const auto& [zone, deficit] : deficits.deficits) {
    if (deficit < kMinCellWeight) continue;
    const auto pop_it = origin_pop.counts.find(zone);
    if (pop_it == origin_pop.counts.end()) {
      throw data_error("origin " + zone + " has a deficit but no population entry");
    }
    Rng rng(splitmix64(seed ^ fnv1a64(zone)));
    std::int64_t remaining = deficit;
    while (remaining >= kMinCellWeight) {
      const std::int64_t w =
          sample_weight_in(dist, pop_it->second, kMinCellWeight, remaining, rng);
      out.push_back(CandidateEdge{zone, w});
      remaining -= w;
    }
  }
  std::sort(out.begin(), out.end(), [](const CandidateEdge& a, const CandidateEdge& b) {
    return a.origin != b.origin ? a.origin < b.origin : a.weight < b.weight;
  });
  return out;
}

inline std::int64_t total_weight(const std::vector<CandidateEdge>& candidates) {
  std::int64_t sum = 0;
  for (const auto& c : candidates) sum += c.weight;
  return sum;
}

inline void save_candidates(const std::vector<CandidateEdge>& candidates,
                            const std::filesystem::path& path,
                            std::string_view metadata_line = {}) {
  auto out = open_artifact(path, metadata_line);
  out << "origin,weight\n";
  for (const auto& c : candidates) out << c.origin << ',' << c.weight << '\n';
  if (!out) throw data_error("write failed: " + path.string());
}

inline std::vector<CandidateEdge> load_candidates(const std::filesystem::path& path) {
  CsvFile file(path, 2);
  detail::require_header(file, {"origin", "weight"});
  std::vector<CandidateEdge> out;
  std::vector<std::string> fields;
  while (file.next(fields)) {
    if (fields[0].empty()) {
      throw data_error(file.path() + ":" + std::to_string(file.line()) +
                       ": empty zone code");
    }
    const std::int64_t w = file.parse_int(fields[1]);
    if (w < kMinCellWeight) {
      throw data_error(file.path() + ":" + std::to_string(file.line()) +
                       ": candidate weight " + std::to_string(w) + " below " +
                       std::to_string(kMinCellWeight));
    }
    out.push_back(CandidateEdge{fields[0], w});
  }
  return out;
}

}  // namespace odrepair
