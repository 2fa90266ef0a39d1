/* odrepair — rebuilds a fine-grained commuter network from privacy-degraded
 * survey releases, and generates synthetic worlds to exercise the pipeline.
 */

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "odrepair/assign.hpp"
#include "odrepair/candidates.hpp"
#include "odrepair/csv.hpp"
#include "odrepair/dist.hpp"
#include "odrepair/errors.hpp"
#include "odrepair/ingest.hpp"
#include "odrepair/network.hpp"
#include "odrepair/pipeline.hpp"
#include "odrepair/synth.hpp"
#include "odrepair/validate.hpp"

namespace fs = std::filesystem;
using namespace odrepair;

namespace {

struct SynthCliOptions {
  fs::path out_dir;
  std::uint64_t seed = 1;
  SynthConfig synth;
  std::optional<fs::path> bundle_config;
  bool emit_truth = true;
};

PerturbConfig* bundle_section(BundleConfig& cfg, const std::string& name) {
  if (name == "fine") return &cfg.fine;
  if (name == "coarse") return &cfg.coarse;
  if (name == "mixed") return &cfg.mixed;
  if (name == "reference") return &cfg.reference;
  return nullptr;
}

BundleConfig load_bundle_config(const fs::path& path) {
  BundleConfig cfg = default_bundle_config();
  auto kv = detail::KeyValueFile::parse(path);
  for (const auto& [key, value] : kv.values) {
    const std::size_t dot = key.find('.');
    PerturbConfig* section =
        dot == std::string::npos ? nullptr : bundle_section(cfg, key.substr(0, dot));
    if (section == nullptr) {
      throw config_error(path.string() + ": unknown bundle key '" + key + "'");
    }
    const std::string field = key.substr(dot + 1);
    if (field == "keep_fraction") {
      section->keep_fraction = detail::parse_double_option(key, value);
    } else if (field == "min_cell") {
      section->min_cell = detail::parse_int_option(key, value);
    } else if (field == "suppress_below") {
      section->suppress_below = detail::parse_int_option(key, value);
    } else if (field == "p_suppress_small") {
      section->p_suppress_small = detail::parse_double_option(key, value);
    } else if (field == "noise_magnitude") {
      section->noise_magnitude = detail::parse_int_option(key, value);
    } else if (field == "additivity") {
      section->additivity = detail::parse_int_option(key, value) != 0;
    } else {
      throw config_error(path.string() + ": unknown bundle key '" + key + "'");
    }
  }
  return cfg;
}

void describe_perturb(std::ofstream& out, const char* name, const PerturbConfig& cfg) {
  out << name << ".keep_fraction=" << format_double(cfg.keep_fraction) << '\n'
      << name << ".min_cell=" << cfg.min_cell << '\n'
      << name << ".suppress_below=" << cfg.suppress_below << '\n'
      << name << ".p_suppress_small=" << format_double(cfg.p_suppress_small) << '\n'
      << name << ".noise_magnitude=" << cfg.noise_magnitude << '\n'
      << name << ".additivity=" << (cfg.additivity ? 1 : 0) << '\n';
}

int run_synth(const SynthCliOptions& opt) {
  BundleConfig bundle_cfg =
      opt.bundle_config ? load_bundle_config(*opt.bundle_config) : default_bundle_config();
  SynthConfig scfg = opt.synth;
  scfg.seed = opt.seed;

  const SynthWorld world = generate_ground_truth(scfg);
  const SurveyBundle bundle =
      make_survey_bundle(world, bundle_cfg, substream_seed(opt.seed, "bundle"));

  fs::create_directories(opt.out_dir);
  const auto at = [&](const char* name) { return opt.out_dir / name; };
  if (opt.emit_truth) save_network(world.fine, at("truth_fine.csv"));
  save_network(bundle.fine, at("fine.csv"));
  save_network(bundle.coarse, at("coarse.csv"));
  save_network(bundle.mixed, at("mixed.csv"));
  save_network(bundle.reference, at("reference.csv"));
  save_population(bundle.origin_pop, at("origin_populations.csv"));
  save_population(bundle.dest_pop, at("dest_populations.csv"));
  save_parent_map(bundle.hierarchy.origin_parent, at("origin_correspondence.csv"));
  save_parent_map(bundle.hierarchy.dest_parent, at("dest_correspondence.csv"));

  {
    auto out = open_artifact(at("bundle_manifest.txt"));
    out << "seed=" << opt.seed << '\n'
        << "n_coarse=" << scfg.n_coarse << '\n'
        << "origins_per_coarse=" << scfg.origins_per_coarse.lo << ':'
        << scfg.origins_per_coarse.hi << '\n'
        << "dests_per_coarse=" << scfg.dests_per_coarse.lo << ':'
        << scfg.dests_per_coarse.hi << '\n'
        << "origin_population=" << scfg.origin_population.lo << ':'
        << scfg.origin_population.hi << '\n'
        << "hub_skew=" << format_double(scfg.hub_skew) << '\n'
        << "gravity_exponent=" << format_double(scfg.gravity_exponent) << '\n';
    describe_perturb(out, "fine", bundle_cfg.fine);
    describe_perturb(out, "coarse", bundle_cfg.coarse);
    describe_perturb(out, "mixed", bundle_cfg.mixed);
    describe_perturb(out, "reference", bundle_cfg.reference);
    out << "truth.edges=" << world.fine.edge_count() << '\n'
        << "truth.commuters=" << world.fine.total_commuters() << '\n'
        << "fine.edges=" << bundle.fine.edge_count() << '\n'
        << "fine.commuters=" << bundle.fine.total_commuters() << '\n'
        << "coarse.commuters=" << bundle.coarse.total_commuters() << '\n';
  }
  {
    // Ready-to-run pipeline config pointing at the files just written.
    auto out = open_artifact(at("pipeline.conf"));
    out << "fine_network = fine.csv\n"
           "reference_network = reference.csv\n"
           "coarse_network = coarse.csv\n"
           "mixed_network = mixed.csv\n"
           "origin_populations = origin_populations.csv\n"
           "dest_populations = dest_populations.csv\n"
           "origin_correspondence = origin_correspondence.csv\n"
           "dest_correspondence = dest_correspondence.csv\n"
           "output_dir = out\n"
        << "seed = " << opt.seed << "\n";
  }

  std::cout << "world: " << world.fine.edge_count() << " true edges, "
            << world.fine.total_commuters() << " commuters\n"
            << "fine release keeps "
            << format_double(static_cast<double>(bundle.fine.total_commuters()) /
                             static_cast<double>(world.fine.total_commuters()))
            << " of true commuters\n"
            << "wrote " << opt.out_dir.string() << "\n";
  return kExitOk;
}

int run_pipeline_cmd(const fs::path& config_path, std::optional<std::uint64_t> seed,
                     std::optional<fs::path> output_dir) {
  PipelineConfig cfg = load_pipeline_config(config_path);
  if (seed) cfg.seed = *seed;
  if (output_dir) cfg.output_dir = *output_dir;
  const PipelineResult result = run_pipeline(cfg);

  std::cout << "manifest " << result.manifest_id << "\n"
            << "surrogate: +" << result.assignment.edges_added << " edges, +"
            << result.assignment.commuters_added << " commuters in "
            << result.assignment.passes << " passes (" << result.assignment.stop_reason
            << ")\n"
            << "unassigned: " << result.assignment.unassigned_candidates
            << " candidates / " << result.assignment.unassigned_commuters
            << " commuters\n";
  for (const auto& row : result.report_rows) {
    if (row[0] == "correlation" || row[0] == "mse_trusted") {
      std::cout << row[0] << '.' << row[1] << " = " << row[2] << "\n";
    }
  }
  std::cout << "artifacts in " << result.output_dir.string() << "\n";
  return kExitOk;
}

int run_ingest_check(const fs::path& config_path) {
  const PipelineConfig cfg = load_pipeline_config(config_path);
  for (const auto& line : ingest_check(cfg)) std::cout << line << "\n";
  std::cout << "ok\n";
  return kExitOk;
}

int run_build_dist(const fs::path& reference, std::optional<fs::path> populations,
                   std::int64_t bin_width, const fs::path& out) {
  const OdNetwork ref = load_network(reference, Level::FineOrigin, Level::FineDest);
  PopulationTable pops;
  pops.level = Level::FineOrigin;
  if (populations) {
    pops = load_population(*populations, Level::FineOrigin);
  } else {
    pops.counts = out_strengths(ref);
  }
  const ConditionalWeightDistribution dist = build_conditional(ref, pops, bin_width);
  save_distribution(dist, out);
  std::cout << "wrote " << out.string() << " (" << dist.bins().size() << " bins)\n";
  return kExitOk;
}

int run_gen_candidates(const fs::path& fine, const fs::path& origin_pop,
                       const fs::path& dist_path, std::uint64_t seed,
                       const fs::path& out) {
  const OdNetwork net = load_network(fine, Level::FineOrigin, Level::FineDest);
  const PopulationTable pops = load_population(origin_pop, Level::FineOrigin);
  const ConditionalWeightDistribution dist = load_distribution(dist_path);
  const DeficitTable deficits = compute_deficits(net, pops);
  const std::vector<CandidateEdge> candidates =
      generate_candidates(deficits, dist, pops, substream_seed(seed, "candidates"));
  save_candidates(candidates, out);
  std::cout << "wrote " << out.string() << " (" << candidates.size() << " candidates, "
            << total_weight(candidates) << " commuters)\n";
  return kExitOk;
}

struct AssignCliOptions {
  fs::path fine, candidates, coarse, mixed;
  fs::path origin_corr, dest_corr, dest_pop;
  fs::path out;
  std::optional<fs::path> trace;
  std::uint64_t seed = 1;
  int max_passes = 10000;
  int stall_passes = 3;
  double wall_clock_seconds = 3600.0;
};

int run_assign(const AssignCliOptions& opt) {
  const OdNetwork fine = load_network(opt.fine, Level::FineOrigin, Level::FineDest);
  const OdNetwork coarse = load_network(opt.coarse, Level::Coarse, Level::Coarse);
  const OdNetwork mixed = load_network(opt.mixed, Level::Coarse, Level::FineDest);
  const PartitionHierarchy hierarchy = load_hierarchy(opt.origin_corr, opt.dest_corr);
  const PopulationTable dest_pop = load_population(opt.dest_pop, Level::FineDest);
  const std::vector<CandidateEdge> candidates = load_candidates(opt.candidates);

  const OdNetwork fine_agg = aggregate(fine, hierarchy);
  const EdgeSet trusted = edge_intersection(coarse, fine_agg);
  AssignmentConfig acfg;
  acfg.seed = substream_seed(opt.seed, "assignment");
  acfg.max_passes = opt.max_passes;
  acfg.stall_passes = opt.stall_passes;
  acfg.wall_clock_seconds = opt.wall_clock_seconds;
  const auto [surrogate, report] =
      build_surrogate(fine, candidates, coarse, mixed, trusted, dest_pop, hierarchy, acfg);

  save_network(surrogate, opt.out);
  if (opt.trace) save_trace(report.trace, *opt.trace);
  std::cout << "wrote " << opt.out.string() << ": +" << report.edges_added
            << " edges, +" << report.commuters_added << " commuters in "
            << report.passes << " passes (" << report.stop_reason << ")\n"
            << "unassigned: " << report.unassigned_candidates << " candidates / "
            << report.unassigned_commuters << " commuters\n";
  return kExitOk;
}

struct ValidateCliOptions {
  std::vector<std::string> nets;   // name=path
  std::vector<std::string> pairs;  // nameA:nameB
  std::vector<std::string> stats;  // name
  std::optional<fs::path> out;
};

int run_validate(const ValidateCliOptions& opt) {
  std::map<std::string, OdNetwork> nets;
  for (const auto& spec : opt.nets) {
    const std::size_t eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
      throw config_error("--net expects NAME=PATH, got '" + spec + "'");
    }
    const std::string name = spec.substr(0, eq);
    if (nets.count(name) != 0) throw config_error("duplicate network name " + name);
    nets.emplace(name, load_network(spec.substr(eq + 1), Level::Coarse, Level::Coarse));
  }
  const auto net_of = [&nets](const std::string& name) -> const OdNetwork& {
    const auto it = nets.find(name);
    if (it == nets.end()) throw config_error("unknown network '" + name + "'");
    return it->second;
  };

  std::vector<std::array<std::string, 3>> rows;
  for (const auto& [name, net] : nets) {
    rows.push_back({"counts", name + ".edges", std::to_string(net.edge_count())});
    rows.push_back({"counts", name + ".commuters", std::to_string(net.total_commuters())});
  }
  for (const auto& pair : opt.pairs) {
    const std::size_t colon = pair.find(':');
    if (colon == std::string::npos) {
      throw config_error("--pair expects NAME:NAME, got '" + pair + "'");
    }
    const std::string a = pair.substr(0, colon);
    const std::string b = pair.substr(colon + 1);
    const OdNetwork& na = net_of(a);
    const OdNetwork& nb = net_of(b);
    rows.push_back({"correlation", a + "_vs_" + b, format_double(corr2d(na, nb))});
    const EdgeSet overlap = edge_intersection(na, nb);
    rows.push_back({"mse_overlap", a + "_vs_" + b,
                    format_double(mse_overlap(overlap, na, nb))});
    rows.push_back({"overlap_edges", a + "_vs_" + b, std::to_string(overlap.size())});
  }
  for (const auto& name : opt.stats) {
    const OdNetwork& net = net_of(name);
    rows.push_back({"clustering", name, format_double(weighted_clustering(net))});
    const PathStats paths = avg_shortest_path(net);
    rows.push_back({"path", name + ".mean_length", format_double(paths.mean_length)});
    rows.push_back(
        {"path", name + ".reachable_fraction", format_double(paths.reachable_fraction)});
  }

  if (opt.out) {
    auto out = open_artifact(*opt.out);
    out << "section,name,value\n";
    for (const auto& row : rows) out << row[0] << ',' << row[1] << ',' << row[2] << '\n';
    std::cout << "wrote " << opt.out->string() << "\n";
  } else {
    for (const auto& row : rows) {
      std::cout << row[0] << '.' << row[1] << " = " << row[2] << "\n";
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"origin/destination network repair toolkit"};
  app.require_subcommand(1);

  // synth
  SynthCliOptions synth_opt;
  auto* synth_cmd = app.add_subcommand(
      "synth", "generate a synthetic world and its degraded survey releases");
  synth_cmd->add_option("--out", synth_opt.out_dir, "output directory")->required();
  synth_cmd->add_option("--seed", synth_opt.seed, "master seed");
  synth_cmd->add_option("--n-coarse", synth_opt.synth.n_coarse, "number of coarse zones");
  synth_cmd->add_option("--origins-per-coarse",
                        [&synth_opt](const std::vector<std::string>& v) {
                          synth_opt.synth.origins_per_coarse.lo = std::stoll(v[0]);
                          synth_opt.synth.origins_per_coarse.hi = std::stoll(v[1]);
                          return true;
                        },
                        "fine origin zones per coarse zone (LO HI)")
      ->expected(2);
  synth_cmd->add_option("--dests-per-coarse",
                        [&synth_opt](const std::vector<std::string>& v) {
                          synth_opt.synth.dests_per_coarse.lo = std::stoll(v[0]);
                          synth_opt.synth.dests_per_coarse.hi = std::stoll(v[1]);
                          return true;
                        },
                        "fine destination zones per coarse zone (LO HI)")
      ->expected(2);
  synth_cmd->add_option("--origin-population",
                        [&synth_opt](const std::vector<std::string>& v) {
                          synth_opt.synth.origin_population.lo = std::stoll(v[0]);
                          synth_opt.synth.origin_population.hi = std::stoll(v[1]);
                          return true;
                        },
                        "residents per fine origin zone (LO HI)")
      ->expected(2);
  synth_cmd->add_option("--hub-skew", synth_opt.synth.hub_skew,
                        "workplace concentration (0 = uniform)");
  synth_cmd->add_option("--gravity-exponent", synth_opt.synth.gravity_exponent,
                        "distance decay exponent");
  synth_cmd->add_option("--bundle-config", synth_opt.bundle_config,
                        "key=value overrides for the degradation model");
  synth_cmd->add_flag("--no-truth",
                      [&synth_opt](std::int64_t) { synth_opt.emit_truth = false; },
                      "do not write the ground-truth network");

  // ingest-check
  fs::path check_config;
  auto* check_cmd =
      app.add_subcommand("ingest-check", "validate and cross-reference the input files");
  check_cmd->add_option("--config", check_config, "pipeline config file")->required();

  // build-dist
  fs::path dist_reference, dist_out;
  std::optional<fs::path> dist_populations;
  std::int64_t dist_bin_width = 25;
  auto* dist_cmd = app.add_subcommand(
      "build-dist", "build the population-conditioned weight distribution");
  dist_cmd->add_option("--reference", dist_reference, "reference edge list")->required();
  dist_cmd->add_option("--populations", dist_populations,
                       "origin populations (default: reference out-strengths)");
  dist_cmd->add_option("--bin-width", dist_bin_width, "population bin width");
  dist_cmd->add_option("--out", dist_out, "output distribution file")->required();

  // gen-candidates
  fs::path cand_fine, cand_pop, cand_dist, cand_out;
  std::uint64_t cand_seed = 1;
  auto* cand_cmd =
      app.add_subcommand("gen-candidates", "materialize under-count candidate stubs");
  cand_cmd->add_option("--fine", cand_fine, "fine edge list")->required();
  cand_cmd->add_option("--origin-populations", cand_pop, "origin populations")->required();
  cand_cmd->add_option("--dist", cand_dist, "distribution file from build-dist")
      ->required();
  cand_cmd->add_option("--seed", cand_seed, "master seed");
  cand_cmd->add_option("--out", cand_out, "output candidate file")->required();

  // assign
  AssignCliOptions assign_opt;
  auto* assign_cmd =
      app.add_subcommand("assign", "attach candidates to destinations under budgets");
  assign_cmd->add_option("--fine", assign_opt.fine, "fine edge list")->required();
  assign_cmd->add_option("--candidates", assign_opt.candidates, "candidate file")
      ->required();
  assign_cmd->add_option("--coarse", assign_opt.coarse, "coarse edge list")->required();
  assign_cmd->add_option("--mixed", assign_opt.mixed, "mixed edge list")->required();
  assign_cmd->add_option("--origin-correspondence", assign_opt.origin_corr,
                         "fine origin -> coarse map")
      ->required();
  assign_cmd->add_option("--dest-correspondence", assign_opt.dest_corr,
                         "fine dest -> coarse map")
      ->required();
  assign_cmd->add_option("--dest-populations", assign_opt.dest_pop,
                         "destination capacities")
      ->required();
  assign_cmd->add_option("--seed", assign_opt.seed, "master seed");
  assign_cmd->add_option("--max-passes", assign_opt.max_passes, "pass limit");
  assign_cmd->add_option("--stall-passes", assign_opt.stall_passes,
                         "zero-acceptance passes before stopping");
  assign_cmd->add_option("--wall-clock-seconds", assign_opt.wall_clock_seconds,
                         "time budget");
  assign_cmd->add_option("--out", assign_opt.out, "output surrogate edge list")
      ->required();
  assign_cmd->add_option("--trace", assign_opt.trace, "convergence trace file");

  // validate
  ValidateCliOptions validate_opt;
  auto* validate_cmd =
      app.add_subcommand("validate", "compare coarse-level networks and report metrics");
  validate_cmd->add_option("--net", validate_opt.nets, "NAME=PATH (repeatable)")
      ->required();
  validate_cmd->add_option("--pair", validate_opt.pairs,
                           "NAME:NAME correlation/error pair (repeatable)");
  validate_cmd->add_option("--stats", validate_opt.stats,
                           "network to compute structure metrics for (repeatable)");
  validate_cmd->add_option("--out", validate_opt.out, "write CSV instead of stdout");

  // pipeline
  fs::path pipeline_config;
  std::optional<std::uint64_t> pipeline_seed;
  std::optional<fs::path> pipeline_out;
  auto* pipeline_cmd = app.add_subcommand("pipeline", "run the full repair pipeline");
  pipeline_cmd->add_option("--config", pipeline_config, "pipeline config file")
      ->required();
  pipeline_cmd->add_option("--seed", pipeline_seed, "override the config seed");
  pipeline_cmd->add_option("--output-dir", pipeline_out, "override the output directory");

  try {
    app.parse(argc, argv);
    if (synth_cmd->parsed()) return run_synth(synth_opt);
    if (check_cmd->parsed()) return run_ingest_check(check_config);
    if (dist_cmd->parsed()) {
      return run_build_dist(dist_reference, dist_populations, dist_bin_width, dist_out);
    }
    if (cand_cmd->parsed()) {
      return run_gen_candidates(cand_fine, cand_pop, cand_dist, cand_seed, cand_out);
    }
    if (assign_cmd->parsed()) return run_assign(assign_opt);
    if (validate_cmd->parsed()) return run_validate(validate_opt);
    if (pipeline_cmd->parsed()) {
      return run_pipeline_cmd(pipeline_config, pipeline_seed, pipeline_out);
    }
    return kExitConfig;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const data_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const infeasible_error& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
