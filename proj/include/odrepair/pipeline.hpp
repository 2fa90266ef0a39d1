#pragma once

#include <array>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "odrepair/assign.hpp"
#include "odrepair/candidates.hpp"
#include "odrepair/csv.hpp"
#include "odrepair/dist.hpp"
#include "odrepair/errors.hpp"
#include "odrepair/ingest.hpp"
#include "odrepair/network.hpp"
#include "odrepair/validate.hpp"

namespace odrepair {

/* End-to-end orchestration: load releases, learn the weight distribution
 * from the previous survey, materialize candidates, assign destinations,
 * audit, and write the validation report. Every artifact carries the run's
 * manifest id on its first line; a failed run moves whatever was already
 * written into <output_dir>/quarantine and re-throws.
 */

struct PipelineConfig {
  std::filesystem::path fine_network;
  std::filesystem::path reference_network;
  std::filesystem::path coarse_network;
  std::filesystem::path mixed_network;
  std::filesystem::path origin_populations;
  std::filesystem::path dest_populations;
  std::filesystem::path origin_correspondence;
  std::filesystem::path dest_correspondence;
  std::optional<std::filesystem::path> reference_populations;  // default: reference out-strengths
  std::filesystem::path output_dir;
  std::uint64_t seed = 1;
  std::int64_t bin_width = 25;
  std::vector<ZoneCode> blocklist;
  int max_passes = 10000;
  int stall_passes = 3;
  double wall_clock_seconds = 3600.0;
};

namespace detail {

struct KeyValueFile {
  std::map<std::string, std::string> values;
  std::filesystem::path dir;

  static std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    std::size_t e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }

  static KeyValueFile parse(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config " + path.string());
    KeyValueFile kv;
    kv.dir = path.parent_path();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      const std::size_t eq = t.find('=');
      if (eq == std::string::npos) {
        throw config_error(path.string() + ":" + std::to_string(line_no) +
                           ": expected key = value");
      }
      const std::string key = trim(t.substr(0, eq));
      const std::string value = trim(t.substr(eq + 1));
      if (key.empty()) {
        throw config_error(path.string() + ":" + std::to_string(line_no) + ": empty key");
      }
      if (!kv.values.emplace(key, value).second) {
        throw config_error(path.string() + ":" + std::to_string(line_no) +
                           ": duplicate key " + key);
      }
    }
    return kv;
  }

  std::string take(const std::string& key) {
    const auto it = values.find(key);
    if (it == values.end()) throw config_error("config is missing key '" + key + "'");
    std::string v = it->second;
    values.erase(it);
    return v;
  }

  std::optional<std::string> take_optional(const std::string& key) {
    const auto it = values.find(key);
    if (it == values.end()) return std::nullopt;
    std::string v = it->second;
    values.erase(it);
    return v;
  }

  // Paths in the config are resolved against the config file's directory.
  std::filesystem::path resolve(const std::string& value) const {
    std::filesystem::path p(value);
    return p.is_absolute() ? p : dir / p;
  }
};

inline std::int64_t parse_int_option(const std::string& key, const std::string& value) {
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw config_error("config key '" + key + "': not an integer: '" + value + "'");
  }
  return out;
}

inline double parse_double_option(const std::string& key, const std::string& value) {
  double out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw config_error("config key '" + key + "': not a number: '" + value + "'");
  }
  return out;
}

}  // namespace detail

inline PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  auto kv = detail::KeyValueFile::parse(path);
  PipelineConfig cfg;
  cfg.fine_network = kv.resolve(kv.take("fine_network"));
  cfg.reference_network = kv.resolve(kv.take("reference_network"));
  cfg.coarse_network = kv.resolve(kv.take("coarse_network"));
  cfg.mixed_network = kv.resolve(kv.take("mixed_network"));
  cfg.origin_populations = kv.resolve(kv.take("origin_populations"));
  cfg.dest_populations = kv.resolve(kv.take("dest_populations"));
  cfg.origin_correspondence = kv.resolve(kv.take("origin_correspondence"));
  cfg.dest_correspondence = kv.resolve(kv.take("dest_correspondence"));
  cfg.output_dir = kv.resolve(kv.take("output_dir"));
  if (auto v = kv.take_optional("reference_populations")) {
    cfg.reference_populations = kv.resolve(*v);
  }
  if (auto v = kv.take_optional("seed")) {
    cfg.seed = static_cast<std::uint64_t>(detail::parse_int_option("seed", *v));
  }
  if (auto v = kv.take_optional("bin_width")) {
    cfg.bin_width = detail::parse_int_option("bin_width", *v);
  }
  if (auto v = kv.take_optional("max_passes")) {
    cfg.max_passes = static_cast<int>(detail::parse_int_option("max_passes", *v));
  }
  if (auto v = kv.take_optional("stall_passes")) {
    cfg.stall_passes = static_cast<int>(detail::parse_int_option("stall_passes", *v));
  }
  if (auto v = kv.take_optional("wall_clock_seconds")) {
    cfg.wall_clock_seconds = detail::parse_double_option("wall_clock_seconds", *v);
  }
  if (auto v = kv.take_optional("blocklist")) {
    std::string rest = *v;
    while (!rest.empty()) {
      const std::size_t comma = rest.find(',');
      const std::string code = detail::KeyValueFile::trim(rest.substr(0, comma));
      if (!code.empty()) cfg.blocklist.push_back(code);
      if (comma == std::string::npos) break;
      rest = rest.substr(comma + 1);
    }
  }
  if (!kv.values.empty()) {
    throw config_error("config has unknown key '" + kv.values.begin()->first + "'");
  }
  // The output directory may be redirected through the environment; every
  // other setting comes from the file or the command line only.
  if (const char* env = std::getenv("ODREPAIR_OUTPUT_DIR"); env != nullptr && *env != 0) {
    cfg.output_dir = env;
  }
  return cfg;
}

// Canonical serialization of the effective settings; its hash goes into the
// run manifest so reruns can prove they used the same configuration.
inline std::string serialize_config(const PipelineConfig& cfg) {
  std::string s;
  const auto add = [&s](std::string_view key, const std::string& value) {
    s += key;
    s += '=';
    s += value;
    s += '\n';
  };
  add("fine_network", cfg.fine_network.string());
  add("reference_network", cfg.reference_network.string());
  add("coarse_network", cfg.coarse_network.string());
  add("mixed_network", cfg.mixed_network.string());
  add("origin_populations", cfg.origin_populations.string());
  add("dest_populations", cfg.dest_populations.string());
  add("origin_correspondence", cfg.origin_correspondence.string());
  add("dest_correspondence", cfg.dest_correspondence.string());
  add("reference_populations",
      cfg.reference_populations ? cfg.reference_populations->string() : std::string());
  add("output_dir", cfg.output_dir.string());
  add("seed", std::to_string(cfg.seed));
  add("bin_width", std::to_string(cfg.bin_width));
  std::string blocklist;
  for (const auto& code : cfg.blocklist) {
    if (!blocklist.empty()) blocklist += ',';
    blocklist += code;
  }
  add("blocklist", blocklist);
  add("max_passes", std::to_string(cfg.max_passes));
  add("stall_passes", std::to_string(cfg.stall_passes));
  add("wall_clock_seconds", format_double(cfg.wall_clock_seconds));
  return s;
}

struct PipelineResult {
  std::string manifest_id;
  std::filesystem::path output_dir;
  OdNetwork surrogate{Level::FineOrigin, Level::FineDest};
  AssignmentReport assignment;
  SurrogateAudit audit;
  PreprocessReport preprocess;  // blocklist removals summed over all releases
  std::vector<std::array<std::string, 3>> report_rows;  // section,name,value
  std::map<std::string, std::filesystem::path> artifacts;
};

namespace detail {

struct LoadedInputs {
  OdNetwork fine{Level::FineOrigin, Level::FineDest};
  OdNetwork reference{Level::FineOrigin, Level::FineDest};
  OdNetwork coarse{Level::Coarse, Level::Coarse};
  OdNetwork mixed{Level::Coarse, Level::FineDest};
  PartitionHierarchy hierarchy;
  PopulationTable origin_pop;
  PopulationTable dest_pop;
  std::optional<PopulationTable> reference_pop;
  PreprocessReport preprocess;
};

inline LoadedInputs load_inputs(const PipelineConfig& cfg) {
  LoadedInputs in;
  in.fine = load_network(cfg.fine_network, Level::FineOrigin, Level::FineDest);
  in.reference = load_network(cfg.reference_network, Level::FineOrigin, Level::FineDest);
  in.coarse = load_network(cfg.coarse_network, Level::Coarse, Level::Coarse);
  in.mixed = load_network(cfg.mixed_network, Level::Coarse, Level::FineDest);
  in.hierarchy = load_hierarchy(cfg.origin_correspondence, cfg.dest_correspondence);
  in.origin_pop = load_population(cfg.origin_populations, Level::FineOrigin);
  in.dest_pop = load_population(cfg.dest_populations, Level::FineDest);
  if (cfg.reference_populations) {
    in.reference_pop = load_population(*cfg.reference_populations, Level::FineOrigin);
  }

  const std::set<ZoneCode> blocklist(cfg.blocklist.begin(), cfg.blocklist.end());
  if (!blocklist.empty()) {
    for (OdNetwork* net : {&in.fine, &in.reference, &in.coarse, &in.mixed}) {
      auto [kept, report] = strip_non_geographic(*net, blocklist);
      *net = std::move(kept);
      in.preprocess.edges_removed += report.edges_removed;
      in.preprocess.commuters_removed += report.commuters_removed;
      for (const auto& code : report.categories_matched) {
        in.preprocess.categories_matched.push_back(code);
      }
    }
    std::sort(in.preprocess.categories_matched.begin(),
              in.preprocess.categories_matched.end());
    in.preprocess.categories_matched.erase(
        std::unique(in.preprocess.categories_matched.begin(),
                    in.preprocess.categories_matched.end()),
        in.preprocess.categories_matched.end());
  }
  return in;
}

inline PopulationTable reference_populations_or_default(const LoadedInputs& in) {
  if (in.reference_pop) return *in.reference_pop;
  PopulationTable pops;
  pops.level = Level::FineOrigin;
  pops.counts = out_strengths(in.reference);
  return pops;
}

}  // namespace detail

inline PipelineResult run_pipeline(const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  if (cfg.output_dir.empty()) throw config_error("output_dir must be set");

  detail::LoadedInputs in = detail::load_inputs(cfg);  // throws before any artifact exists

  fs::create_directories(cfg.output_dir);
  PipelineResult result;
  result.output_dir = cfg.output_dir;
  result.preprocess = in.preprocess;

  // Manifest: one id derived from the effective config, the seed, and the
  // checksums of every input actually read.
  std::vector<std::pair<std::string, fs::path>> inputs = {
      {"fine_network", cfg.fine_network},
      {"reference_network", cfg.reference_network},
      {"coarse_network", cfg.coarse_network},
      {"mixed_network", cfg.mixed_network},
      {"origin_populations", cfg.origin_populations},
      {"dest_populations", cfg.dest_populations},
      {"origin_correspondence", cfg.origin_correspondence},
      {"dest_correspondence", cfg.dest_correspondence},
  };
  if (cfg.reference_populations) {
    inputs.emplace_back("reference_populations", *cfg.reference_populations);
  }
  const std::string config_hash = to_hex(fnv1a64(serialize_config(cfg)));
  std::string manifest_body;
  manifest_body += "seed=" + std::to_string(cfg.seed) + "\n";
  manifest_body += "config_hash=" + config_hash + "\n";
  for (const auto& [name, path] : inputs) {
    manifest_body +=
        "input." + name + "=" + path.string() + "=" + to_hex(fnv1a64_file(path)) + "\n";
  }
  result.manifest_id = to_hex(fnv1a64(manifest_body));
  const std::string meta = "manifest=" + result.manifest_id;

  const auto artifact_path = [&](const char* name) { return cfg.output_dir / name; };
  const auto note_artifact = [&](const char* key, const fs::path& p) {
    result.artifacts[key] = p;
  };

  try {
    {
      auto out = open_artifact(artifact_path("run_manifest.txt"), meta);
      out << manifest_body;
      if (!out) throw data_error("write failed: run_manifest.txt");
      note_artifact("manifest", artifact_path("run_manifest.txt"));
    }

    const OdNetwork fine_agg = aggregate(in.fine, in.hierarchy);
    const EdgeSet trusted = edge_intersection(in.coarse, fine_agg);
    if (trusted.empty()) {
      throw infeasible_error("no trusted coarse pairs: the coarse release and the "
                             "aggregated fine release share no edges");
    }

    const PopulationTable ref_pop = detail::reference_populations_or_default(in);
    const ConditionalWeightDistribution dist =
        build_conditional(in.reference, ref_pop, cfg.bin_width);
    save_distribution(dist, artifact_path("distribution.csv"), meta);
    note_artifact("distribution", artifact_path("distribution.csv"));

    const DeficitTable deficits = compute_deficits(in.fine, in.origin_pop);
    const std::vector<CandidateEdge> candidates = generate_candidates(
        deficits, dist, in.origin_pop, substream_seed(cfg.seed, "candidates"));
    save_candidates(candidates, artifact_path("candidates.csv"), meta);
    note_artifact("candidates", artifact_path("candidates.csv"));

    AssignmentConfig acfg;
    acfg.seed = substream_seed(cfg.seed, "assignment");
    acfg.max_passes = cfg.max_passes;
    acfg.stall_passes = cfg.stall_passes;
    acfg.wall_clock_seconds = cfg.wall_clock_seconds;
    auto [surrogate, assignment] =
        build_surrogate(in.fine, candidates, in.coarse, in.mixed, trusted, in.dest_pop,
                        in.hierarchy, acfg);
    result.assignment = std::move(assignment);

    save_network(surrogate, artifact_path("surrogate.csv"), meta);
    note_artifact("surrogate", artifact_path("surrogate.csv"));
    save_trace(result.assignment.trace, artifact_path("convergence_trace.csv"), meta);
    note_artifact("trace", artifact_path("convergence_trace.csv"));

    result.audit = audit_surrogate(surrogate, in.fine, in.coarse, in.mixed,
                                   in.origin_pop, in.dest_pop, in.hierarchy);
    {
      auto out = open_artifact(artifact_path("constraint_audit.csv"), meta);
      out << "check,violations\n";
      out << "missing_fine_edges," << result.audit.missing_fine_edges << '\n';
      out << "untrusted_additions," << result.audit.untrusted_additions << '\n';
      out << "unlisted_additions," << result.audit.unlisted_additions << '\n';
      out << "coarse_budget_violations," << result.audit.coarse_budget_violations << '\n';
      out << "dest_capacity_violations," << result.audit.dest_capacity_violations << '\n';
      out << "origin_capacity_violations," << result.audit.origin_capacity_violations
          << '\n';
      if (!out) throw data_error("write failed: constraint_audit.csv");
      note_artifact("audit", artifact_path("constraint_audit.csv"));
    }
    if (!result.audit.ok()) {
      throw infeasible_error("constraint audit found violations; see constraint_audit.csv");
    }

    // Validation report.
    const OdNetwork surrogate_agg = aggregate(surrogate, in.hierarchy);
    auto& rows = result.report_rows;
    const auto add = [&rows](std::string section, std::string name, std::string value) {
      rows.push_back({std::move(section), std::move(name), std::move(value)});
    };
    const auto add_i = [&add](std::string section, std::string name, std::int64_t v) {
      add(std::move(section), std::move(name), std::to_string(v));
    };
    const auto add_d = [&add](std::string section, std::string name, double v) {
      add(std::move(section), std::move(name), format_double(v));
    };

    const auto count_rows = [&](const char* name, const OdNetwork& net) {
      add_i("counts", std::string(name) + ".edges",
            static_cast<std::int64_t>(net.edge_count()));
      add_i("counts", std::string(name) + ".commuters", net.total_commuters());
    };
    count_rows("fine", in.fine);
    count_rows("fine_agg", fine_agg);
    count_rows("coarse", in.coarse);
    count_rows("mixed", in.mixed);
    count_rows("reference", in.reference);
    count_rows("surrogate", surrogate);
    count_rows("surrogate_agg", surrogate_agg);
    add_i("counts", "trusted_pairs", static_cast<std::int64_t>(trusted.size()));
    add_i("counts", "coarse_only_pairs",
          static_cast<std::int64_t>(edge_complement(in.coarse, fine_agg).size()));
    if (in.preprocess.edges_removed > 0) {
      add_i("preprocess", "edges_removed", in.preprocess.edges_removed);
      add_i("preprocess", "commuters_removed", in.preprocess.commuters_removed);
    }

    add_i("assignment", "candidates_total", result.assignment.candidates_total);
    add_i("assignment", "candidates_assigned", result.assignment.candidates_assigned);
    add_i("assignment", "commuters_added", result.assignment.commuters_added);
    add_i("assignment", "edges_added", result.assignment.edges_added);
    add_i("assignment", "unassigned_candidates", result.assignment.unassigned_candidates);
    add_i("assignment", "unassigned_commuters", result.assignment.unassigned_commuters);
    add_i("assignment", "passes", result.assignment.passes);
    add("assignment", "stop_reason", result.assignment.stop_reason);
    add_i("assignment", "rejected_pair_not_trusted",
          result.assignment.rejected_pair_not_trusted);
    add_i("assignment", "rejected_coarse_budget", result.assignment.rejected_coarse_budget);
    add_i("assignment", "rejected_dest_budget", result.assignment.rejected_dest_budget);

    const double corr_cf = corr2d(in.coarse, fine_agg);
    const double corr_cs = corr2d(in.coarse, surrogate_agg);
    const double corr_fs = corr2d(fine_agg, surrogate_agg);
    add_d("correlation", "coarse_vs_fine_agg", corr_cf);
    add_d("correlation", "coarse_vs_surrogate_agg", corr_cs);
    add_d("correlation", "fine_agg_vs_surrogate_agg", corr_fs);

    const double mse_cf = mse_overlap(trusted, in.coarse, fine_agg);
    const double mse_cs = mse_overlap(trusted, in.coarse, surrogate_agg);
    const double mse_fs = mse_overlap(trusted, fine_agg, surrogate_agg);
    add_d("mse_trusted", "coarse_vs_fine_agg", mse_cf);
    add_d("mse_trusted", "coarse_vs_surrogate_agg", mse_cs);
    add_d("mse_trusted", "fine_agg_vs_surrogate_agg", mse_fs);

    // Structure metrics on the full coarse release and on every network
    // restricted to the trusted pairs (like-for-like comparison). A metric
    // can be undefined on a degenerate network (empty after restriction, or
    // holding self-loops only); that is a property of the data, not a
    // failure of the run, so the row says so instead of aborting.
    const auto structure_rows = [&](const char* name, const OdNetwork& net) {
      try {
        add_d("clustering", name, weighted_clustering(net));
      } catch (const data_error&) {
        add("clustering", name, "undefined");
      }
      try {
        const PathStats paths = avg_shortest_path(net);
        add_d("path", std::string(name) + ".mean_length", paths.mean_length);
        add_d("path", std::string(name) + ".reachable_fraction", paths.reachable_fraction);
      } catch (const data_error&) {
        add("path", std::string(name) + ".mean_length", "undefined");
        add("path", std::string(name) + ".reachable_fraction", "undefined");
      }
    };
    structure_rows("coarse", in.coarse);
    structure_rows("coarse_trusted", restrict_to(in.coarse, trusted));
    structure_rows("fine_agg_trusted", restrict_to(fine_agg, trusted));
    structure_rows("surrogate_agg_trusted", restrict_to(surrogate_agg, trusted));

    const auto hist_rows = [&](const std::string& section, const Histogram& h) {
      for (const auto& [lo, count] : h.counts) add_i(section, std::to_string(lo), count);
    };
    hist_rows("weight_hist.fine", weight_histogram(in.fine, 1));
    hist_rows("weight_hist.surrogate", weight_histogram(surrogate, 1));
    hist_rows("weight_hist.reference", weight_histogram(in.reference, 1));
    hist_rows("weight_hist10.coarse", weight_histogram(in.coarse, 10));
    hist_rows("weight_hist10.surrogate_agg", weight_histogram(surrogate_agg, 10));
    hist_rows("missing_edge_hist.coarse_minus_fine_agg",
              missing_edge_histogram(in.coarse, fine_agg, 1));
    hist_rows("in_strength_hist.surrogate", strength_histogram(surrogate, true, 25));
    hist_rows("out_strength_hist.surrogate", strength_histogram(surrogate, false, 25));

    {
      auto out = open_artifact(artifact_path("validation_report.csv"), meta);
      out << "section,name,value\n";
      for (const auto& row : rows) {
        out << row[0] << ',' << row[1] << ',' << row[2] << '\n';
      }
      if (!out) throw data_error("write failed: validation_report.csv");
      note_artifact("report", artifact_path("validation_report.csv"));
    }

    result.surrogate = std::move(surrogate);
    return result;
  } catch (...) {
    // Never leave half-written artifacts where a later run (or a human)
    // could mistake them for results.
    const fs::path quarantine = cfg.output_dir / "quarantine";
    std::error_code ec;
    fs::create_directories(quarantine, ec);
    for (const char* name :
         {"run_manifest.txt", "distribution.csv", "candidates.csv", "surrogate.csv",
          "convergence_trace.csv", "constraint_audit.csv", "validation_report.csv"}) {
      const fs::path src = cfg.output_dir / name;
      if (fs::exists(src, ec)) {
        fs::rename(src, quarantine / name, ec);
      }
    }
    throw;
  }
}

/* Input survey for the check subcommand: structural validation happens in
 * the loaders; this cross-references the tables and reports what a repair
 * run would see. Fatal findings throw data_error after the report lines
 * are assembled. */
inline std::vector<std::string> ingest_check(const PipelineConfig& cfg) {
  detail::LoadedInputs in = detail::load_inputs(cfg);
  std::vector<std::string> lines;
  std::vector<std::string> fatal;

  const auto net_line = [&lines](const char* name, const OdNetwork& net) {
    std::int64_t below = 0;
    for (const auto& [key, w] : net.edges()) {
      if (w < kMinCellWeight) ++below;
    }
    lines.push_back(std::string(name) + ": " + std::to_string(net.edge_count()) +
                    " edges, " + std::to_string(net.total_commuters()) + " commuters" +
                    (below > 0 ? ", " + std::to_string(below) +
                                     " cells below the publishable minimum of " +
                                     std::to_string(kMinCellWeight)
                               : std::string()));
  };
  net_line("fine", in.fine);
  net_line("reference", in.reference);
  net_line("coarse", in.coarse);
  net_line("mixed", in.mixed);
  if (in.preprocess.edges_removed > 0) {
    lines.push_back("blocklist: removed " + std::to_string(in.preprocess.edges_removed) +
                    " edges / " + std::to_string(in.preprocess.commuters_removed) +
                    " commuters");
  }

  const auto count_missing_parents = [&](const OdNetwork& net, const char* name) {
    std::set<ZoneCode> missing;
    for (const auto& [key, w] : net.edges()) {
      if (net.origin_level() == Level::FineOrigin &&
          in.hierarchy.origin_parent.find(key.first) == in.hierarchy.origin_parent.end()) {
        missing.insert(key.first);
      }
      if (net.dest_level() == Level::FineDest &&
          in.hierarchy.dest_parent.find(key.second) == in.hierarchy.dest_parent.end()) {
        missing.insert(key.second);
      }
    }
    if (!missing.empty()) {
      fatal.push_back(std::string(name) + ": " + std::to_string(missing.size()) +
                      " zones missing from the correspondence (first: " +
                      *missing.begin() + ")");
    }
  };
  count_missing_parents(in.fine, "fine");
  count_missing_parents(in.reference, "reference");
  count_missing_parents(in.mixed, "mixed");

  std::size_t missing_origin_pop = 0;
  for (const auto& [zone, s] : out_strengths(in.fine)) {
    if (in.origin_pop.counts.find(zone) == in.origin_pop.counts.end()) {
      ++missing_origin_pop;
    }
  }
  if (missing_origin_pop > 0) {
    fatal.push_back("fine origins missing from origin_populations: " +
                    std::to_string(missing_origin_pop));
  }
  std::size_t missing_dest_pop = 0;
  for (const auto& [zone, s] : in_strengths(in.fine)) {
    if (in.dest_pop.counts.find(zone) == in.dest_pop.counts.end()) ++missing_dest_pop;
  }
  if (missing_dest_pop > 0) {
    fatal.push_back("fine destinations missing from dest_populations: " +
                    std::to_string(missing_dest_pop));
  }
  if (cfg.reference_populations) {
    std::size_t missing_ref = 0;
    for (const auto& [zone, s] : out_strengths(in.reference)) {
      if (in.reference_pop->counts.find(zone) == in.reference_pop->counts.end()) {
        ++missing_ref;
      }
    }
    if (missing_ref > 0) {
      fatal.push_back("reference origins missing from reference_populations: " +
                      std::to_string(missing_ref));
    }
  }

  std::size_t overfull_origins = 0;
  const auto strengths = out_strengths(in.fine);
  for (const auto& [zone, n] : in.origin_pop.counts) {
    const auto it = strengths.find(zone);
    if (it != strengths.end() && it->second > n) ++overfull_origins;
  }
  if (overfull_origins > 0) {
    lines.push_back("warning: " + std::to_string(overfull_origins) +
                    " origins already exceed their population (negative deficit)");
  }

  const OdNetwork fine_agg = aggregate(in.fine, in.hierarchy);
  const EdgeSet trusted = edge_intersection(in.coarse, fine_agg);
  lines.push_back("trusted coarse pairs: " + std::to_string(trusted.size()) + " of " +
                  std::to_string(in.coarse.edge_count()) + " coarse edges");

  for (const auto& f : fatal) lines.push_back("error: " + f);
  if (!fatal.empty()) {
    std::string msg = "ingest check failed:";
    for (const auto& f : fatal) msg += "\n  " + f;
    throw data_error(msg);
  }
  return lines;
}

}  // namespace odrepair
