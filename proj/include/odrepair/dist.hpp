#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <map>
#include <vector>

#include "odrepair/csv.hpp"
#include "odrepair/errors.hpp"
#include "odrepair/network.hpp"
#include "odrepair/rng.hpp"

namespace odrepair {

/* Weight distribution conditioned on origin population.
 *
 * Edges from a trusted reference network are grouped into bins of origin
 * population (bin = population / bin_width); each bin stores the empirical
 * distribution of its edge weights. Queries for a population whose bin saw
 * no data fall back to the nearest non-empty bin (by bin center, ties to
 * the lower bin); populations outside the observed range clamp to the edge
 * bins. Sampling restricts the support to a caller-supplied window instead
 * of rejecting draws, so one query costs one uniform variate.
 */
class ConditionalWeightDistribution {
 public:
  struct Bin {
    std::vector<std::int64_t> weights;  // ascending
    std::vector<double> prob;           // per-weight probability, sums to ~1
    std::vector<double> cum;            // inclusive prefix sums of prob
    bool empty() const { return weights.empty(); }
  };

  std::int64_t bin_width() const { return bin_width_; }
  const std::vector<Bin>& bins() const { return bins_; }

  std::size_t bin_index(std::int64_t population) const {
    if (population < 0) population = 0;
    std::size_t idx = static_cast<std::size_t>(population / bin_width_);
    if (idx >= bins_.size()) idx = bins_.size() - 1;
    return idx;
  }

  // True when no bin holds any observation; sampling is then impossible.
  bool unusable() const {
    for (const auto& bin : bins_) {
      if (!bin.empty()) return false;
    }
    return true;
  }

  // Bin actually used for this population after fallback; nullptr if none.
  const Bin* resolved_bin(std::int64_t population) const {
    const std::ptrdiff_t r = resolved_[bin_index(population)];
    return r < 0 ? nullptr : &bins_[static_cast<std::size_t>(r)];
  }

  double probability(std::int64_t population, std::int64_t weight) const {
    const Bin* bin = resolved_bin(population);
    if (bin == nullptr) return 0.0;
    const auto it = std::lower_bound(bin->weights.begin(), bin->weights.end(), weight);
    if (it == bin->weights.end() || *it != weight) return 0.0;
    return bin->prob[static_cast<std::size_t>(it - bin->weights.begin())];
  }

 private:
  friend ConditionalWeightDistribution build_conditional(const OdNetwork&,
                                                         const PopulationTable&,
                                                         std::int64_t);
  friend ConditionalWeightDistribution load_distribution(const std::filesystem::path&);

  // Fills prefix sums and the per-bin fallback table. Must run identically
  // for built and reloaded instances so both sample the same sequences.
  void finalize() {
    resolved_.assign(bins_.size(), -1);
    std::vector<std::size_t> non_empty;
    for (std::size_t i = 0; i < bins_.size(); ++i) {
      Bin& bin = bins_[i];
      bin.cum.resize(bin.prob.size());
      double acc = 0.0;
      for (std::size_t k = 0; k < bin.prob.size(); ++k) {
        acc += bin.prob[k];
        bin.cum[k] = acc;
      }
      if (!bin.empty()) non_empty.push_back(i);
    }
    if (non_empty.empty()) return;
    for (std::size_t i = 0; i < bins_.size(); ++i) {
      std::size_t best = non_empty.front();
      std::int64_t best_gap = std::numeric_limits<std::int64_t>::max();
      for (const std::size_t cand : non_empty) {
        const std::int64_t gap =
            std::abs(static_cast<std::int64_t>(cand) - static_cast<std::int64_t>(i));
        if (gap < best_gap) {  // strict: ties keep the lower candidate
          best_gap = gap;
          best = cand;
        }
      }
      resolved_[i] = static_cast<std::ptrdiff_t>(best);
    }
  }

  std::int64_t bin_width_ = 1;
  std::vector<Bin> bins_;
  std::vector<std::ptrdiff_t> resolved_;
};

inline ConditionalWeightDistribution build_conditional(const OdNetwork& reference,
                                                       const PopulationTable& populations,
                                                       std::int64_t bin_width) {
  if (bin_width < 1) throw config_error("bin_width must be >= 1");
  if (reference.edge_count() == 0) throw data_error("reference network has no edges");

  std::map<std::size_t, std::map<std::int64_t, std::int64_t>> tallies;
  std::size_t max_bin = 0;
  for (const auto& [key, w] : reference.edges()) {
    const auto pop_it = populations.counts.find(key.first);
    if (pop_it == populations.counts.end()) {
      throw data_error("reference origin " + key.first + " missing from populations");
    }
    const std::size_t bin =
        static_cast<std::size_t>(std::max<std::int64_t>(pop_it->second, 0) / bin_width);
    ++tallies[bin][w];
    max_bin = std::max(max_bin, bin);
  }

  ConditionalWeightDistribution dist;
  dist.bin_width_ = bin_width;
  dist.bins_.resize(max_bin + 1);
  for (const auto& [bin_idx, counts] : tallies) {
    auto& bin = dist.bins_[bin_idx];
    std::int64_t total = 0;
    for (const auto& [w, c] : counts) total += c;
    for (const auto& [w, c] : counts) {
      bin.weights.push_back(w);
      bin.prob.push_back(static_cast<double>(c) / static_cast<double>(total));
    }
  }
  dist.finalize();
  return dist;
}

/* Draws a weight for the given population with the support restricted to
 * [min_weight, max_weight]. When the window contains no observed weight the
 * draw degenerates to max_weight itself, which callers choose to be a value
 * that keeps their own invariants. Exactly one uniform variate is consumed
 * per call with a non-empty window resolution. */
inline std::int64_t sample_weight_in(const ConditionalWeightDistribution& dist,
                                     std::int64_t population, std::int64_t min_weight,
                                     std::int64_t max_weight, Rng& rng) {
  if (dist.unusable()) {
    throw infeasible_error("weight distribution has no observations in any bin");
  }
  const auto* bin = dist.resolved_bin(population);
  const auto lo_it = std::lower_bound(bin->weights.begin(), bin->weights.end(), min_weight);
  const auto hi_it = std::upper_bound(bin->weights.begin(), bin->weights.end(), max_weight);
  if (lo_it >= hi_it) return max_weight;

  const std::size_t lo = static_cast<std::size_t>(lo_it - bin->weights.begin());
  const std::size_t hi = static_cast<std::size_t>(hi_it - bin->weights.begin()) - 1;
  const double base = lo == 0 ? 0.0 : bin->cum[lo - 1];
  const double mass = bin->cum[hi] - base;
  if (!(mass > 0.0)) return max_weight;

  const double r = base + draw_unit(rng) * mass;
  const auto pick =
      std::upper_bound(bin->cum.begin() + static_cast<std::ptrdiff_t>(lo),
                       bin->cum.begin() + static_cast<std::ptrdiff_t>(hi) + 1, r);
  std::size_t idx = static_cast<std::size_t>(pick - bin->cum.begin());
  if (idx > hi) idx = hi;  // guards the r == top-of-window float corner
  return bin->weights[idx];
}

inline std::int64_t sample_weight(const ConditionalWeightDistribution& dist,
                                  std::int64_t population, std::int64_t max_weight,
                                  Rng& rng) {
  return sample_weight_in(dist, population, std::numeric_limits<std::int64_t>::min(),
                          max_weight, rng);
}

/* Serialization: one row per (bin, weight) with its probability, rows
 * ordered by bin then weight. Probabilities are written in shortest
 * round-trip form, so a reloaded distribution reproduces the in-memory
 * one bit-for-bit, draws included. */
inline void save_distribution(const ConditionalWeightDistribution& dist,
                              const std::filesystem::path& path,
                              std::string_view metadata_line = {}) {
  auto out = open_artifact(path, metadata_line);
  out << "bin_lo,bin_hi,weight,probability\n";
  for (std::size_t i = 0; i < dist.bins().size(); ++i) {
    const auto& bin = dist.bins()[i];
    const std::int64_t lo = static_cast<std::int64_t>(i) * dist.bin_width();
    const std::int64_t hi = lo + dist.bin_width() - 1;
    for (std::size_t k = 0; k < bin.weights.size(); ++k) {
      out << lo << ',' << hi << ',' << bin.weights[k] << ','
          << format_double(bin.prob[k]) << '\n';
    }
  }
  if (!out) throw data_error("write failed: " + path.string());
}

inline ConditionalWeightDistribution load_distribution(const std::filesystem::path& path) {
  CsvFile file(path, 4);
  detail::require_header(file, {"bin_lo", "bin_hi", "weight", "probability"});

  ConditionalWeightDistribution dist;
  dist.bin_width_ = 0;
  std::vector<std::string> fields;
  std::int64_t cur_lo = -1;
  std::size_t cur_bin = 0;
  while (file.next(fields)) {
    const std::int64_t lo = file.parse_int(fields[0]);
    const std::int64_t hi = file.parse_int(fields[1]);
    const std::int64_t weight = file.parse_int(fields[2]);
    const double prob = file.parse_double(fields[3]);
    const std::string where = file.path() + ":" + std::to_string(file.line());
    if (dist.bin_width_ == 0) {
      dist.bin_width_ = hi - lo + 1;
      if (dist.bin_width_ < 1) throw data_error(where + ": bad bin bounds");
    }
    if (hi - lo + 1 != dist.bin_width_ || lo % dist.bin_width_ != 0) {
      throw data_error(where + ": inconsistent bin bounds");
    }
    if (!(prob > 0.0) || prob > 1.0) {
      throw data_error(where + ": probability out of range");
    }
    if (lo != cur_lo) {
      if (lo < cur_lo) throw data_error(where + ": bins out of order");
      cur_lo = lo;
      cur_bin = static_cast<std::size_t>(lo / dist.bin_width_);
      if (cur_bin >= dist.bins_.size()) dist.bins_.resize(cur_bin + 1);
    }
    auto& bin = dist.bins_[cur_bin];
    if (!bin.weights.empty() && weight <= bin.weights.back()) {
      throw data_error(where + ": weights out of order within bin");
    }
    bin.weights.push_back(weight);
    bin.prob.push_back(prob);
  }
  if (dist.bins_.empty()) throw data_error(path.string() + ": no distribution rows");
  for (const auto& bin : dist.bins_) {
    if (bin.empty()) continue;
    double sum = 0.0;
    for (const double p : bin.prob) sum += p;
    if (std::abs(sum - 1.0) > 1e-9) {
      throw data_error(path.string() + ": bin probabilities do not sum to 1");
    }
  }
  dist.finalize();
  return dist;
}

}  // namespace odrepair
