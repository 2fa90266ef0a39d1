#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "odrepair/errors.hpp"
#include "odrepair/network.hpp"

namespace odrepair {

/* Validation metrics.
 *
 * Edge lists are sparse, but the comparison questions are posed over the
 * dense origin x destination matrix (absent cells count as zeros). The
 * kernels below get dense-matrix answers from sparse inputs: explicit sums
 * over present cells plus closed-form contributions of the zero cells.
 */

namespace detail {
inline double matrix_cell_count(const OdNetwork& a, const OdNetwork& b) {
  if (a.origin_level() == a.dest_level()) {
    std::set<ZoneCode> nodes;
    for (const auto& [key, w] : a.edges()) {
      nodes.insert(key.first);
      nodes.insert(key.second);
    }
    for (const auto& [key, w] : b.edges()) {
      nodes.insert(key.first);
      nodes.insert(key.second);
    }
    const double n = static_cast<double>(nodes.size());
    return n * n;
  }
  std::set<ZoneCode> origins, dests;
  for (const auto& [key, w] : a.edges()) {
    origins.insert(key.first);
    dests.insert(key.second);
  }
  for (const auto& [key, w] : b.edges()) {
    origins.insert(key.first);
    dests.insert(key.second);
  }
  return static_cast<double>(origins.size()) * static_cast<double>(dests.size());
}
}  // namespace detail

// Pearson correlation between two weight matrices over their dense shared
// universe (union of zones of both networks; absent edges are zeros).
inline double corr2d(const OdNetwork& a, const OdNetwork& b) {
  require_same_levels(a, b, "corr2d");
  const double n = detail::matrix_cell_count(a, b);
  if (n <= 0) throw data_error("corr2d: empty networks");

  double sum_a = 0, sum_b = 0;
  for (const auto& [key, w] : a.edges()) sum_a += static_cast<double>(w);
  for (const auto& [key, w] : b.edges()) sum_b += static_cast<double>(w);
  const double mean_a = sum_a / n;
  const double mean_b = sum_b / n;

  // Walk the union of both key sets; remaining zero-cells contribute in
  // closed form.
  double cov = 0, var_a = 0, var_b = 0;
  double present = 0;
  auto ia = a.edges().begin();
  auto ib = b.edges().begin();
  while (ia != a.edges().end() || ib != b.edges().end()) {
    double wa = 0, wb = 0;
    if (ib == b.edges().end() || (ia != a.edges().end() && ia->first < ib->first)) {
      wa = static_cast<double>(ia->second);
      ++ia;
    } else if (ia == a.edges().end() || ib->first < ia->first) {
      wb = static_cast<double>(ib->second);
      ++ib;
    } else {
      wa = static_cast<double>(ia->second);
      wb = static_cast<double>(ib->second);
      ++ia;
      ++ib;
    }
    const double da = wa - mean_a;
    const double db = wb - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
    present += 1;
  }
  const double zeros = n - present;
  cov += zeros * mean_a * mean_b;
  var_a += zeros * mean_a * mean_a;
  var_b += zeros * mean_b * mean_b;
  if (!(var_a > 0) || !(var_b > 0)) {
    throw data_error("corr2d: undefined for a constant weight matrix");
  }
  return cov / std::sqrt(var_a * var_b);
}

// Mean squared weight difference over an explicit edge set (absent = 0).
inline double mse_overlap(const EdgeSet& keys, const OdNetwork& a, const OdNetwork& b) {
  if (keys.empty()) throw data_error("mse_overlap: empty edge set");
  double sum = 0;
  for (const auto& key : keys) {
    const double d = static_cast<double>(a.weight_or(key) - b.weight_or(key));
    sum += d * d;
  }
  return sum / static_cast<double>(keys.size());
}

enum class EdgeFold { Max, Sum };  // how two directed weights fold to one undirected

/* Mean weighted clustering coefficient. Directions are folded to an
 * undirected graph, weights scaled by the largest folded weight, and each
 * node contributes the mean geometric intensity of its closed triangles:
 *   C_i = 2 / (k_i (k_i - 1)) * sum_{j<k} (w_ij w_jk w_ki)^(1/3).
 * Nodes with fewer than two neighbours contribute zero. */
inline double weighted_clustering(const OdNetwork& net, EdgeFold fold = EdgeFold::Max) {
  if (net.edge_count() == 0) throw data_error("weighted_clustering: empty network");
  std::map<ZoneCode, std::map<ZoneCode, double>> adj;
  std::set<ZoneCode> nodes;
  for (const auto& [key, w] : net.edges()) {
    nodes.insert(key.first);
    nodes.insert(key.second);
    if (key.first == key.second) continue;
    const double wd = static_cast<double>(w);
    for (const auto& [u, v] : {key, EdgeKey{key.second, key.first}}) {
      double& slot = adj[u][v];
      slot = fold == EdgeFold::Max ? std::max(slot, wd) : slot + wd;
    }
  }
  double max_w = 0;
  for (const auto& [u, nbrs] : adj) {
    for (const auto& [v, w] : nbrs) max_w = std::max(max_w, w);
  }
  if (max_w <= 0) return 0.0;  // only self-loops: no triangles anywhere

  double total = 0;
  for (const auto& node : nodes) {
    const auto it = adj.find(node);
    if (it == adj.end()) continue;
    const auto& nbrs = it->second;
    const std::size_t k = nbrs.size();
    if (k < 2) continue;
    double sum = 0;
    for (auto j = nbrs.begin(); j != nbrs.end(); ++j) {
      auto l = j;
      for (++l; l != nbrs.end(); ++l) {
        const auto& j_adj = adj.find(j->first)->second;
        const auto jl = j_adj.find(l->first);
        if (jl == j_adj.end()) continue;
        sum += std::cbrt((j->second / max_w) * (jl->second / max_w) * (l->second / max_w));
      }
    }
    total += 2.0 * sum / (static_cast<double>(k) * static_cast<double>(k - 1));
  }
  return total / static_cast<double>(nodes.size());
}

struct PathStats {
  double mean_length = 0.0;        // over reachable ordered pairs
  double reachable_fraction = 0.0; // reachable / all ordered pairs
  std::uint64_t reachable_pairs = 0;
  std::uint64_t ordered_pairs = 0;
};

/* Average shortest path with edge length 1/weight (heavy flows are short).
 * Directed; unreachable pairs are excluded from the mean and reported via
 * the reachable fraction instead of being guessed at. */
inline PathStats avg_shortest_path(const OdNetwork& net) {
  if (net.edge_count() == 0) throw data_error("avg_shortest_path: empty network");
  std::map<ZoneCode, std::uint32_t> index;
  for (const auto& [key, w] : net.edges()) {
    index.emplace(key.first, 0);
    index.emplace(key.second, 0);
  }
  std::uint32_t next = 0;
  for (auto& [zone, idx] : index) idx = next++;
  const std::uint32_t n = next;

  std::vector<std::vector<std::pair<std::uint32_t, double>>> out_edges(n);
  for (const auto& [key, w] : net.edges()) {
    if (key.first == key.second) continue;
    out_edges[index[key.first]].emplace_back(index[key.second],
                                             1.0 / static_cast<double>(w));
  }

  PathStats stats;
  stats.ordered_pairs = static_cast<std::uint64_t>(n) * (n - 1);
  double sum = 0;
  std::vector<double> dist(n);
  using Item = std::pair<double, std::uint32_t>;
  for (std::uint32_t src = 0; src < n; ++src) {
    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
    dist[src] = 0;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
    heap.emplace(0.0, src);
    while (!heap.empty()) {
      const auto [d, u] = heap.top();
      heap.pop();
      if (d > dist[u]) continue;
      for (const auto& [v, len] : out_edges[u]) {
        const double nd = d + len;
        if (nd < dist[v]) {
          dist[v] = nd;
          heap.emplace(nd, v);
        }
      }
    }
    for (std::uint32_t v = 0; v < n; ++v) {
      if (v == src || std::isinf(dist[v])) continue;
      sum += dist[v];
      ++stats.reachable_pairs;
    }
  }
  if (stats.reachable_pairs == 0) {
    throw data_error("avg_shortest_path: no reachable ordered pairs");
  }
  stats.mean_length = sum / static_cast<double>(stats.reachable_pairs);
  stats.reachable_fraction = static_cast<double>(stats.reachable_pairs) /
                             static_cast<double>(stats.ordered_pairs);
  return stats;
}

struct Histogram {
  std::int64_t bin_width = 1;
  std::map<std::int64_t, std::int64_t> counts;  // bin lower edge -> count

  void add(std::int64_t value) { ++counts[(value / bin_width) * bin_width]; }
};

inline Histogram weight_histogram(const OdNetwork& net, std::int64_t bin_width) {
  if (bin_width < 1) throw config_error("histogram bin_width must be >= 1");
  Histogram h;
  h.bin_width = bin_width;
  for (const auto& [key, w] : net.edges()) h.add(w);
  return h;
}

inline Histogram strength_histogram(const OdNetwork& net, bool incoming,
                                    std::int64_t bin_width) {
  if (bin_width < 1) throw config_error("histogram bin_width must be >= 1");
  Histogram h;
  h.bin_width = bin_width;
  for (const auto& [zone, s] : incoming ? in_strengths(net) : out_strengths(net)) {
    h.add(s);
  }
  return h;
}

// Weights of edges present in `a` but absent from `b` — the release mass
// that fine data cannot account for.
inline Histogram missing_edge_histogram(const OdNetwork& a, const OdNetwork& b,
                                        std::int64_t bin_width) {
  require_same_levels(a, b, "missing_edge_histogram");
  if (bin_width < 1) throw config_error("histogram bin_width must be >= 1");
  Histogram h;
  h.bin_width = bin_width;
  for (const auto& [key, w] : a.edges()) {
    if (!b.has_edge(key.first, key.second)) h.add(w);
  }
  return h;
}

/* Stability check across repeated reconstructions: the same inputs with
 * different seeds should agree closely at the coarse level. */
struct InstantiationComparison {
  struct PairRow {
    std::size_t a = 0, b = 0;
    double corr = 0.0;
    double mse = 0.0;
  };
  struct StatRow {
    std::size_t index = 0;
    double clustering = 0.0;
    PathStats paths;
  };
  std::vector<PairRow> versus_coarse;  // b is the surrogate index
  std::vector<PairRow> pairwise;
  std::vector<StatRow> stats;
};

inline InstantiationComparison compare_instantiations(
    const std::vector<OdNetwork>& surrogates, const OdNetwork& coarse,
    const PartitionHierarchy& hierarchy) {
  if (surrogates.size() < 2) {
    throw data_error("compare_instantiations needs at least two surrogates");
  }
  std::vector<OdNetwork> agg;
  agg.reserve(surrogates.size());
  for (const auto& s : surrogates) agg.push_back(aggregate(s, hierarchy));

  InstantiationComparison cmp;
  for (std::size_t i = 0; i < agg.size(); ++i) {
    cmp.versus_coarse.push_back(
        {0, i, corr2d(coarse, agg[i]),
         mse_overlap(edge_intersection(coarse, agg[i]), coarse, agg[i])});
    cmp.stats.push_back({i, weighted_clustering(agg[i]), avg_shortest_path(agg[i])});
    for (std::size_t j = i + 1; j < agg.size(); ++j) {
      cmp.pairwise.push_back(
          {i, j, corr2d(agg[i], agg[j]),
           mse_overlap(edge_intersection(agg[i], agg[j]), agg[i], agg[j])});
    }
  }
  return cmp;
}

}  // namespace odrepair
