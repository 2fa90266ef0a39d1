#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "odrepair/candidates.hpp"
#include "odrepair/csv.hpp"
#include "odrepair/errors.hpp"
#include "odrepair/network.hpp"
#include "odrepair/rng.hpp"

namespace odrepair {

/* Destination assignment.
 *
 * Candidate stubs are attached to fine destination zones under three hard
 * constraints, tracked exactly in integer arithmetic:
 *   - the coarse pair of every addition must be trusted (present in both
 *     the coarse release and the aggregated fine release) and has a budget:
 *     coarse released weight minus already-aggregated surrogate weight;
 *   - the (coarse origin, fine destination) pair must appear in the mixed
 *     release — destinations never gain origins the releases do not list;
 *   - each destination zone absorbs at most its employed-population count.
 */

struct BudgetLedger {
  std::map<EdgeKey, std::int64_t> coarse_pair_budget;  // over trusted pairs only
  std::map<ZoneCode, std::int64_t> dest_budget;        // per fine destination
};

inline BudgetLedger make_budget_ledger(const OdNetwork& coarse,
                                       const OdNetwork& surrogate,
                                       const EdgeSet& trusted,
                                       const PopulationTable& dest_pop,
                                       const PartitionHierarchy& hierarchy) {
  BudgetLedger ledger;
  const OdNetwork current = aggregate(surrogate, hierarchy);
  for (const auto& pair : trusted) {
    ledger.coarse_pair_budget.emplace(pair,
                                      coarse.weight_or(pair) - current.weight_or(pair));
  }
  const auto in = in_strengths(surrogate);
  for (const auto& [zone, cap] : dest_pop.counts) {
    const auto it = in.find(zone);
    ledger.dest_budget.emplace(zone, cap - (it == in.end() ? 0 : it->second));
  }
  return ledger;
}

enum class AssignOutcome {
  Accepted,
  RejectedPairNotTrusted,
  RejectedCoarseBudget,
  RejectedDestBudget,
};

// Attempts one attachment; on success both budgets shrink and the surrogate
// gains the edge (weights merge if the edge already exists).
inline AssignOutcome try_assign(const CandidateEdge& candidate, const ZoneCode& dest,
                                BudgetLedger& ledger, const PartitionHierarchy& hierarchy,
                                OdNetwork& surrogate) {
  const EdgeKey pair{hierarchy.parent_of(candidate.origin, surrogate.origin_level()),
                     hierarchy.parent_of(dest, surrogate.dest_level())};
  const auto pit = ledger.coarse_pair_budget.find(pair);
  if (pit == ledger.coarse_pair_budget.end()) return AssignOutcome::RejectedPairNotTrusted;
  if (pit->second < candidate.weight) return AssignOutcome::RejectedCoarseBudget;
  const auto dit = ledger.dest_budget.find(dest);
  if (dit == ledger.dest_budget.end() || dit->second < candidate.weight) {
    return AssignOutcome::RejectedDestBudget;
  }
  pit->second -= candidate.weight;
  dit->second -= candidate.weight;
  surrogate.merge_edge(candidate.origin, dest, candidate.weight);
  return AssignOutcome::Accepted;
}

// Candidates eligible for one destination: their coarse origin must reach
// the destination in the mixed release and the coarse pair must be trusted.
// Reference implementation; build_surrogate uses an indexed equivalent.
inline std::vector<CandidateEdge> allowed_candidate_pool(
    const ZoneCode& dest, const OdNetwork& mixed, const EdgeSet& trusted,
    const PartitionHierarchy& hierarchy, const std::vector<CandidateEdge>& pool) {
  const ZoneCode& dest_parent = hierarchy.parent_of(dest, Level::FineDest);
  std::vector<CandidateEdge> out;
  for (const auto& c : pool) {
    const ZoneCode& origin_parent = hierarchy.parent_of(c.origin, Level::FineOrigin);
    if (mixed.weight_or(origin_parent, dest) == 0) continue;
    if (trusted.count(EdgeKey{origin_parent, dest_parent}) == 0) continue;
    out.push_back(c);
  }
  return out;
}

struct AssignmentConfig {
  std::uint64_t seed = 1;
  int max_passes = 10000;
  int stall_passes = 3;           // consecutive zero-acceptance passes before stopping
  double wall_clock_seconds = 3600.0;
};

struct TracePoint {
  int pass = 0;
  double elapsed_seconds = 0.0;
  std::int64_t unassigned_commuters = 0;
};

struct AssignmentReport {
  std::int64_t candidates_total = 0;
  std::int64_t candidates_assigned = 0;
  std::int64_t commuters_added = 0;
  std::int64_t edges_added = 0;               // new keys, beyond weight top-ups
  std::int64_t unassigned_candidates = 0;
  std::int64_t unassigned_commuters = 0;
  std::int64_t rejected_pair_not_trusted = 0;  // cumulative draw outcomes
  std::int64_t rejected_coarse_budget = 0;
  std::int64_t rejected_dest_budget = 0;
  int passes = 0;
  std::string stop_reason;  // exhausted | stalled | max_passes | wall_clock
  std::vector<TracePoint> trace;
};

inline std::pair<OdNetwork, AssignmentReport> build_surrogate(
    const OdNetwork& fine, const std::vector<CandidateEdge>& candidates,
    const OdNetwork& coarse, const OdNetwork& mixed, const EdgeSet& trusted,
    const PopulationTable& dest_pop, const PartitionHierarchy& hierarchy,
    const AssignmentConfig& cfg) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const auto elapsed = [&t0] {
    return std::chrono::duration<double>(clock::now() - t0).count();
  };

  if (mixed.origin_level() != Level::Coarse) {
    throw data_error("mixed release must have coarse origins");
  }
  if (cfg.max_passes < 1 || cfg.stall_passes < 1) {
    throw config_error("max_passes and stall_passes must be >= 1");
  }
  for (const auto& c : candidates) {
    if (c.weight < kMinCellWeight) {
      throw data_error("candidate for " + c.origin + " has weight " +
                       std::to_string(c.weight) + " below " +
                       std::to_string(kMinCellWeight));
    }
  }

  OdNetwork surrogate = fine;
  BudgetLedger ledger = make_budget_ledger(coarse, surrogate, trusted, dest_pop, hierarchy);

  // Assignment must not depend on the caller's candidate order.
  std::vector<CandidateEdge> pool = candidates;
  std::sort(pool.begin(), pool.end(), [](const CandidateEdge& a, const CandidateEdge& b) {
    return a.origin != b.origin ? a.origin < b.origin : a.weight < b.weight;
  });

  // Live candidates, bucketed by coarse origin; drawing uniformly over the
  // union of a destination's buckets equals a uniform draw over its allowed
  // pool. Removal swaps with the bucket tail.
  std::map<ZoneCode, std::vector<std::uint32_t>> buckets;
  std::int64_t live_weight = 0;
  std::size_t live_count = pool.size();
  for (std::uint32_t i = 0; i < pool.size(); ++i) {
    buckets[hierarchy.parent_of(pool[i].origin, Level::FineOrigin)].push_back(i);
    live_weight += pool[i].weight;
  }

  // Per destination: coarse origins allowed to send it candidates.
  std::map<ZoneCode, std::vector<std::vector<std::uint32_t>*>> reachable;
  for (const auto& [key, w] : mixed.edges()) {
    const auto bit = buckets.find(key.first);
    if (bit == buckets.end()) continue;
    if (trusted.count(EdgeKey{key.first, hierarchy.parent_of(key.second, Level::FineDest)}) == 0) {
      continue;
    }
    reachable[key.second].push_back(&bit->second);
  }

  std::vector<ZoneCode> order;
  order.reserve(dest_pop.counts.size());
  for (const auto& [zone, cap] : dest_pop.counts) {
    if (reachable.count(zone) != 0) order.push_back(zone);
  }

  AssignmentReport report;
  report.candidates_total = static_cast<std::int64_t>(pool.size());
  const std::size_t initial_edges = surrogate.edge_count();
  report.trace.push_back(TracePoint{0, elapsed(), live_weight});

  Rng rng(splitmix64(cfg.seed));
  int stall_streak = 0;
  while (report.passes < cfg.max_passes) {
    ++report.passes;
    std::int64_t accepted_this_pass = 0;
    shuffle_in_place(order, rng);
    for (const ZoneCode& dest : order) {
      const auto& dest_buckets = reachable.find(dest)->second;
      std::uint64_t total_live = 0;
      for (const auto* bucket : dest_buckets) total_live += bucket->size();
      if (total_live == 0) continue;

      std::uint64_t r = draw_below(rng, total_live);
      std::vector<std::uint32_t>* bucket = nullptr;
      for (auto* b : dest_buckets) {
        if (r < b->size()) {
          bucket = b;
          break;
        }
        r -= b->size();
      }
      const std::uint32_t idx = (*bucket)[static_cast<std::size_t>(r)];
      const CandidateEdge& cand = pool[idx];

      switch (try_assign(cand, dest, ledger, hierarchy, surrogate)) {
        case AssignOutcome::Accepted:
          (*bucket)[static_cast<std::size_t>(r)] = bucket->back();
          bucket->pop_back();
          live_weight -= cand.weight;
          --live_count;
          ++report.candidates_assigned;
          report.commuters_added += cand.weight;
          ++accepted_this_pass;
          break;
        case AssignOutcome::RejectedPairNotTrusted:
          ++report.rejected_pair_not_trusted;
          break;
        case AssignOutcome::RejectedCoarseBudget:
          ++report.rejected_coarse_budget;
          break;
        case AssignOutcome::RejectedDestBudget:
          ++report.rejected_dest_budget;
          break;
      }
    }
    report.trace.push_back(TracePoint{report.passes, elapsed(), live_weight});

    if (live_count == 0) {
      report.stop_reason = "exhausted";
      break;
    }
    if (accepted_this_pass == 0) {
      if (++stall_streak >= cfg.stall_passes) {
        report.stop_reason = "stalled";
        break;
      }
    } else {
      stall_streak = 0;
    }
    if (elapsed() > cfg.wall_clock_seconds) {
      report.stop_reason = "wall_clock";
      break;
    }
  }
  if (report.stop_reason.empty()) report.stop_reason = "max_passes";

  report.edges_added = static_cast<std::int64_t>(surrogate.edge_count() - initial_edges);
  report.unassigned_candidates = static_cast<std::int64_t>(live_count);
  report.unassigned_commuters = live_weight;
  return {std::move(surrogate), std::move(report)};
}

inline void save_trace(const std::vector<TracePoint>& trace,
                       const std::filesystem::path& path,
                       std::string_view metadata_line = {}) {
  auto out = open_artifact(path, metadata_line);
  out << "pass,elapsed_seconds,unassigned_commuters\n";
  for (const auto& p : trace) {
    out << p.pass << ',' << format_double(p.elapsed_seconds) << ','
        << p.unassigned_commuters << '\n';
  }
  if (!out) throw data_error("write failed: " + path.string());
}

/* Re-derives every constraint from the raw inputs — no ledger state is
 * consulted — and counts violations. A correct build yields all zeros. */
struct SurrogateAudit {
  std::int64_t missing_fine_edges = 0;        // released fine edges lost or shrunk
  std::int64_t untrusted_additions = 0;       // added weight on non-trusted coarse pairs
  std::int64_t unlisted_additions = 0;        // added weight outside the mixed release
  std::int64_t coarse_budget_violations = 0;  // trusted pairs exceeding the coarse release
  std::int64_t dest_capacity_violations = 0;
  std::int64_t origin_capacity_violations = 0;

  bool ok() const {
    return missing_fine_edges == 0 && untrusted_additions == 0 &&
           unlisted_additions == 0 && coarse_budget_violations == 0 &&
           dest_capacity_violations == 0 && origin_capacity_violations == 0;
  }
};

inline SurrogateAudit audit_surrogate(const OdNetwork& surrogate, const OdNetwork& fine,
                                      const OdNetwork& coarse, const OdNetwork& mixed,
                                      const PopulationTable& origin_pop,
                                      const PopulationTable& dest_pop,
                                      const PartitionHierarchy& hierarchy) {
  SurrogateAudit audit;
  const OdNetwork fine_agg = aggregate(fine, hierarchy);
  const EdgeSet trusted = edge_intersection(coarse, fine_agg);

  for (const auto& [key, w] : fine.edges()) {
    if (surrogate.weight_or(key) < w) ++audit.missing_fine_edges;
  }
  for (const auto& [key, w] : surrogate.edges()) {
    if (w <= fine.weight_or(key)) continue;  // unchanged released edge
    const EdgeKey pair{hierarchy.parent_of(key.first, surrogate.origin_level()),
                       hierarchy.parent_of(key.second, surrogate.dest_level())};
    if (trusted.count(pair) == 0) ++audit.untrusted_additions;
    if (mixed.weight_or(pair.first, key.second) == 0) ++audit.unlisted_additions;
  }
  const OdNetwork surrogate_agg = aggregate(surrogate, hierarchy);
  for (const auto& pair : trusted) {
    if (surrogate_agg.weight_or(pair) > coarse.weight_or(pair)) {
      ++audit.coarse_budget_violations;
    }
  }
  for (const auto& [zone, s] : in_strengths(surrogate)) {
    const auto it = dest_pop.counts.find(zone);
    if (it == dest_pop.counts.end() || s > it->second) ++audit.dest_capacity_violations;
  }
  for (const auto& [zone, s] : out_strengths(surrogate)) {
    const auto it = origin_pop.counts.find(zone);
    if (it == origin_pop.counts.end() || s > it->second) ++audit.origin_capacity_violations;
  }
  return audit;
}

}  // namespace odrepair
