#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "odrepair/errors.hpp"
#include "odrepair/network.hpp"
#include "odrepair/rng.hpp"

namespace odrepair {

/* Synthetic commuting worlds.
 *
 * The real survey releases cannot be redistributed, so tests and experiments
 * run against generated stand-ins: a ground-truth fine network drawn from a
 * gravity kernel, plus a degradation simulator that mimics what survey
 * releases suffer in practice: non-response thinning, small-cell
 * suppression and bounded non-positive cell noise. Published counts never
 * exceed true counts.
 */

struct IntRange {
  std::int64_t lo = 0;
  std::int64_t hi = 0;  // inclusive
};

struct SynthConfig {
  int n_coarse = 200;               // coarse zones
  IntRange origins_per_coarse{8, 12};   // fine origin zones per coarse zone
  IntRange dests_per_coarse{4, 6};      // fine destination zones per coarse zone
  IntRange origin_population{200, 800}; // residents per fine origin zone
  double hub_skew = 8.0;            // >0 concentrates jobs in few destinations
  double gravity_exponent = 3.0;    // distance decay of commute choice
  std::uint64_t seed = 1;
};

struct SynthWorld {
  PartitionHierarchy hierarchy;
  OdNetwork fine{Level::FineOrigin, Level::FineDest};  // ground truth
  PopulationTable origin_pop;  // equals exact out-strengths of `fine`
  PopulationTable dest_pop;    // equals exact in-strengths of `fine`

  // Geometry and attractiveness are retained so an independent edge draw
  // (e.g. a "previous survey" of the same world) reuses identical zones.
  struct Layout {
    std::vector<ZoneCode> origins;
    std::vector<double> origin_x, origin_y;
    std::vector<std::int64_t> origin_n;
    std::vector<ZoneCode> dests;
    std::vector<double> dest_x, dest_y;
    std::vector<double> dest_attract;
    double gravity_exponent = 2.0;
  } layout;
};

namespace detail {

inline std::string zone_code(char prefix, unsigned coarse_idx, int sub_idx = -1) {
  char buf[24];
  if (sub_idx < 0) {
    std::snprintf(buf, sizeof buf, "%c%04u", prefix, coarse_idx);
  } else {
    std::snprintf(buf, sizeof buf, "%c%04u%03u", prefix, coarse_idx,
                  static_cast<unsigned>(sub_idx));
  }
  return buf;
}

inline void check_range(const IntRange& r, std::int64_t min_lo, const char* name) {
  if (r.lo > r.hi || r.lo < min_lo) {
    throw config_error(std::string("bad range for ") + name + ": [" +
                       std::to_string(r.lo) + "," + std::to_string(r.hi) + "]");
  }
}

// Distributes `n` commuters over destinations with p(y) proportional to
// attract[y] / (d^2 + eps^2)^(gamma/2), one categorical draw per commuter.
inline void draw_commutes(double ox, double oy, std::int64_t n,
                          const SynthWorld::Layout& lay, Rng& rng,
                          std::map<std::size_t, std::int64_t>& out) {
  const std::size_t m = lay.dests.size();
  std::vector<double> cum(m);
  double acc = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double dx = ox - lay.dest_x[j];
    const double dy = oy - lay.dest_y[j];
    const double d2 = dx * dx + dy * dy + 1e-4;  // softened: co-located zones stay finite
    acc += lay.dest_attract[j] / std::pow(d2, lay.gravity_exponent * 0.5);
    cum[j] = acc;
  }
  for (std::int64_t c = 0; c < n; ++c) {
    const double r = draw_unit(rng) * acc;
    std::size_t j = static_cast<std::size_t>(
        std::lower_bound(cum.begin(), cum.end(), r) - cum.begin());
    if (j >= m) j = m - 1;
    ++out[j];
  }
}

}  // namespace detail

inline SynthWorld generate_ground_truth(const SynthConfig& cfg) {
  if (cfg.n_coarse < 2) throw config_error("n_coarse must be >= 2");
  detail::check_range(cfg.origins_per_coarse, 1, "origins_per_coarse");
  detail::check_range(cfg.dests_per_coarse, 1, "dests_per_coarse");
  detail::check_range(cfg.origin_population, 0, "origin_population");
  if (cfg.hub_skew < 0) throw config_error("hub_skew must be >= 0");
  if (cfg.gravity_exponent < 0) throw config_error("gravity_exponent must be >= 0");

  SynthWorld world;
  auto& lay = world.layout;
  lay.gravity_exponent = cfg.gravity_exponent;

  Rng rng = make_rng(cfg.seed, "synth.layout");
  for (int i = 1; i <= cfg.n_coarse; ++i) {
    const unsigned ci = static_cast<unsigned>(i);
    const ZoneCode coarse = detail::zone_code('2', ci);
    const double cx = draw_unit(rng);
    const double cy = draw_unit(rng);
    const std::int64_t n_orig = draw_int(rng, cfg.origins_per_coarse.lo,
                                         cfg.origins_per_coarse.hi);
    for (std::int64_t k = 1; k <= n_orig; ++k) {
      const ZoneCode code = detail::zone_code('1', ci, static_cast<int>(k));
      world.hierarchy.origin_parent.emplace(code, coarse);
      lay.origins.push_back(code);
      lay.origin_x.push_back(cx + (draw_unit(rng) - 0.5) * 0.04);
      lay.origin_y.push_back(cy + (draw_unit(rng) - 0.5) * 0.04);
      lay.origin_n.push_back(draw_int(rng, cfg.origin_population.lo,
                                      cfg.origin_population.hi));
    }
    const std::int64_t n_dest = draw_int(rng, cfg.dests_per_coarse.lo,
                                         cfg.dests_per_coarse.hi);
    for (std::int64_t k = 1; k <= n_dest; ++k) {
      const ZoneCode code = detail::zone_code('7', ci, static_cast<int>(k));
      world.hierarchy.dest_parent.emplace(code, coarse);
      lay.dests.push_back(code);
      lay.dest_x.push_back(cx + (draw_unit(rng) - 0.5) * 0.04);
      lay.dest_y.push_back(cy + (draw_unit(rng) - 0.5) * 0.04);
      lay.dest_attract.push_back(std::exp(cfg.hub_skew * draw_unit(rng)));
    }
  }

  Rng edge_rng = make_rng(cfg.seed, "synth.edges");
  world.origin_pop.level = Level::FineOrigin;
  world.dest_pop.level = Level::FineDest;
  std::map<std::size_t, std::int64_t> tally;
  for (std::size_t i = 0; i < lay.origins.size(); ++i) {
    world.origin_pop.counts.emplace(lay.origins[i], lay.origin_n[i]);
    tally.clear();
    detail::draw_commutes(lay.origin_x[i], lay.origin_y[i], lay.origin_n[i], lay,
                          edge_rng, tally);
    for (const auto& [j, w] : tally) world.fine.add_edge(lay.origins[i], lay.dests[j], w);
  }
  for (const auto& code : lay.dests) world.dest_pop.counts.emplace(code, 0);
  for (const auto& [dest, s] : in_strengths(world.fine)) world.dest_pop.counts[dest] = s;
  return world;
}

// Fresh, independent draw of commutes on the same zones (the stand-in for a
// previous survey of the same world).
inline OdNetwork redraw_edges(const SynthWorld& world, std::uint64_t seed) {
  const auto& lay = world.layout;
  OdNetwork net(Level::FineOrigin, Level::FineDest);
  Rng rng(splitmix64(seed));
  std::map<std::size_t, std::int64_t> tally;
  for (std::size_t i = 0; i < lay.origins.size(); ++i) {
    tally.clear();
    detail::draw_commutes(lay.origin_x[i], lay.origin_y[i], lay.origin_n[i], lay, rng,
                          tally);
    for (const auto& [j, w] : tally) net.add_edge(lay.origins[i], lay.dests[j], w);
  }
  return net;
}

/* Release-degradation simulator. Applied to a true network it
 *   1. thins every cell binomially with keep_fraction (survey non-response:
 *      each commuter responds independently),
 *   2. subtracts bounded non-positive noise from every cell,
 *   3. removes cells that fall below min_cell,
 *   4. removes surviving small cells (true weight <= suppress_below)
 *      with probability p_suppress_small,
 *   5. optionally repairs coarse pair totals ("additive" releases):
 *      lost weight is folded back into surviving cells of the same coarse
 *      pair; a pair with no survivors gets its largest removed cell back
 *      when the pair total is publishable (>= min_cell), otherwise the
 *      whole pair stays suppressed.
 * Steps 1-2 only remove commuters, so a released count never exceeds the
 * true one and aggregates of a degraded release stay within true budgets.
 */
struct PerturbConfig {
  double keep_fraction = 1.0;  // per-commuter response probability
  std::int64_t min_cell = kMinCellWeight;
  std::int64_t suppress_below = kMinCellWeight;  // inclusive upper edge of step 4
  double p_suppress_small = 0.0;
  std::int64_t noise_magnitude = 0;
  bool additivity = false;
};

inline OdNetwork perturb(const OdNetwork& net, const PerturbConfig& cfg,
                         std::uint64_t seed,
                         const PartitionHierarchy* hierarchy = nullptr) {
  if (cfg.min_cell < 1) throw config_error("min_cell must be >= 1");
  if (cfg.keep_fraction <= 0.0 || cfg.keep_fraction > 1.0) {
    throw config_error("keep_fraction must be in (0,1]");
  }
  if (cfg.noise_magnitude < 0) throw config_error("noise_magnitude must be >= 0");
  if (cfg.p_suppress_small < 0.0 || cfg.p_suppress_small > 1.0) {
    throw config_error("p_suppress_small must be in [0,1]");
  }
  if (cfg.additivity && hierarchy == nullptr) {
    throw config_error("additivity repair needs a partition hierarchy");
  }

  Rng rng(splitmix64(seed));
  OdNetwork out(net.origin_level(), net.dest_level());

  struct PairState {
    std::int64_t target = 0;                       // true pair total
    std::int64_t kept = 0;                         // surviving weight
    std::vector<const EdgeKey*> survivors;         // in key order
    const EdgeKey* largest_removed = nullptr;      // tie -> first in key order
    std::int64_t largest_removed_w = 0;
  };
  std::map<EdgeKey, PairState> pairs;

  std::map<EdgeKey, std::int64_t> kept_weight;
  for (const auto& [key, w] : net.edges()) {
    std::int64_t responded = w;
    if (cfg.keep_fraction < 1.0) {
      responded = 0;
      for (std::int64_t i = 0; i < w; ++i) {
        if (draw_unit(rng) < cfg.keep_fraction) ++responded;
      }
    }
    const std::int64_t noisy = responded - draw_int(rng, 0, cfg.noise_magnitude);
    bool removed = noisy < cfg.min_cell;
    if (!removed && w <= cfg.suppress_below && cfg.p_suppress_small > 0.0) {
      removed = draw_unit(rng) < cfg.p_suppress_small;
    }

    PairState* ps = nullptr;
    if (cfg.additivity) {
      const EdgeKey pair{hierarchy->parent_of(key.first, net.origin_level()),
                         hierarchy->parent_of(key.second, net.dest_level())};
      ps = &pairs[pair];
      ps->target += w;
    }
    if (removed) {
      if (ps != nullptr && w > ps->largest_removed_w) {
        ps->largest_removed_w = w;
        ps->largest_removed = &key;
      }
      continue;
    }
    kept_weight.emplace(key, noisy);
    if (ps != nullptr) {
      ps->kept += noisy;
      ps->survivors.push_back(&key);
    }
  }

  if (cfg.additivity) {
    for (auto& [pair, ps] : pairs) {
      (void)pair;
      const std::int64_t lost = ps.target - ps.kept;
      if (lost <= 0) continue;
      if (!ps.survivors.empty()) {
        // Proportional top-up, remainder onto the heaviest survivor.
        const EdgeKey* heaviest = ps.survivors.front();
        for (const EdgeKey* key : ps.survivors) {
          if (kept_weight[*key] > kept_weight[*heaviest]) heaviest = key;
        }
        std::int64_t distributed = 0;
        for (const EdgeKey* key : ps.survivors) {
          const std::int64_t add = lost * kept_weight[*key] / ps.kept;
          kept_weight[*key] += add;
          distributed += add;
        }
        kept_weight[*heaviest] += lost - distributed;
      } else if (ps.target >= cfg.min_cell) {
        kept_weight.emplace(*ps.largest_removed, ps.target);
      }
      // else: pair total below the publishable floor; stays suppressed
    }
  }

  for (const auto& [key, w] : kept_weight) out.add_edge(key.first, key.second, w);
  return out;
}

struct BundleConfig {
  PerturbConfig fine;       // heavy loss: current fine-resolution release
  PerturbConfig coarse;     // near-lossless coarse release
  PerturbConfig mixed;      // mixed-resolution release
  PerturbConfig reference;  // previous-survey release (additive)
};

// Defaults tuned so the fine release loses roughly a third of its commuters
// (mostly to non-response thinning, the dominant loss channel in practice)
// while the coarse releases stay near-complete — the regime the repair
// pipeline is built for.
inline BundleConfig default_bundle_config() {
  BundleConfig cfg;
  cfg.fine.keep_fraction = 0.72;
  cfg.fine.noise_magnitude = 1;
  cfg.fine.suppress_below = 7;
  cfg.fine.p_suppress_small = 0.45;
  cfg.coarse.suppress_below = 5;
  cfg.coarse.p_suppress_small = 0.25;
  cfg.mixed.suppress_below = 4;
  cfg.mixed.p_suppress_small = 0.15;
  cfg.reference.suppress_below = 4;
  cfg.reference.p_suppress_small = 0.15;
  cfg.reference.additivity = true;
  return cfg;
}

/* Everything the repair pipeline consumes, derived from one world:
 * perturbed fine/coarse/mixed views of the current truth plus a perturbed
 * independent previous-survey draw, with exact population tables. */
struct SurveyBundle {
  PartitionHierarchy hierarchy;
  OdNetwork fine{Level::FineOrigin, Level::FineDest};
  OdNetwork coarse{Level::Coarse, Level::Coarse};
  OdNetwork mixed{Level::Coarse, Level::FineDest};
  OdNetwork reference{Level::FineOrigin, Level::FineDest};
  PopulationTable origin_pop;
  PopulationTable dest_pop;
};

inline SurveyBundle make_survey_bundle(const SynthWorld& world, const BundleConfig& cfg,
                                       std::uint64_t seed) {
  SurveyBundle bundle;
  bundle.hierarchy = world.hierarchy;
  bundle.origin_pop = world.origin_pop;
  bundle.dest_pop = world.dest_pop;
  bundle.fine = perturb(world.fine, cfg.fine, substream_seed(seed, "bundle.fine"),
                        &world.hierarchy);
  bundle.coarse = perturb(aggregate(world.fine, world.hierarchy), cfg.coarse,
                          substream_seed(seed, "bundle.coarse"));
  bundle.mixed = perturb(aggregate_origins(world.fine, world.hierarchy), cfg.mixed,
                         substream_seed(seed, "bundle.mixed"));
  const OdNetwork previous =
      redraw_edges(world, substream_seed(seed, "bundle.reference.draw"));
  bundle.reference = perturb(previous, cfg.reference,
                             substream_seed(seed, "bundle.reference.noise"),
                             &world.hierarchy);
  return bundle;
}

}  // namespace odrepair
