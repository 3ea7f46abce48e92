#include "plg/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "plg/analysis.hpp"
#include "plg/config.hpp"
#include "plg/empirical.hpp"
#include "plg/planner.hpp"
#include "plg/policy.hpp"
#include "plg/ppo.hpp"
#include "plg/render.hpp"
#include "plg/sim.hpp"
#include "plg/trajectory.hpp"

namespace plg {

namespace fs = std::filesystem;

std::string version_matrix() {
  auto tag = [](const Magic& m) { return std::string(m.begin(), m.end()); };
  std::ostringstream out;
  out << "plg " << kToolVersion << "\n";
  out << "  graph bundle        " << tag(kBundleMagic) << " v" << kBundleVersion << "\n";
  out << "  graph               " << tag(kPlgMagic) << " v" << kPlgVersion << "\n";
  out << "  conditional table   " << tag(kTableMagic) << " v" << kTableVersion << "\n";
  out << "  empirical policy    " << tag(kEmpiricalMagic) << " v" << kEmpiricalVersion << "\n";
  out << "  policy checkpoint   " << tag(kPolicyMagic) << " v" << kPolicyVersion << "\n";
  out << "  seed states         " << tag(kSeedsMagic) << " v" << kSeedsVersion << "\n";
  out << "  episode log         csv+json v1\n";
  out << "  report              json v1";
  return out.str();
}

namespace {

struct Options {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int jobs = 1;

  std::string data, mapping, out, plg, empirical, seeds, policy, background, runs, render_dir,
      metrics, initial_out;
  double radius = 0.0;
  double threshold = 0.0;
  double horizon = -1.0;
  int iterations = -1;
  std::size_t episodes = 1000;
  int vehicles = -1;
  int ticks = -1;
  double lane_change_rate = -1.0;
  NodeId start = kNoNode;
  ClusterId target = kNoCluster;
  int paths = 100;
  long long episode = -1;
  int max_renders = 10;
};

void progress(const std::string& msg) { std::cerr << msg << "\n"; }

RunConfig load_config(const Options& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : RunConfig::from_json_file(o.config);
  if (o.seed_given) c.seed = o.seed;
  if (o.radius > 0.0) c.build.radius = o.radius;
  if (o.threshold > 0.0) c.seeds.threshold = o.threshold;
  if (o.horizon >= 0.0) c.horizon = o.horizon;
  if (o.iterations >= 0) c.train.iterations = o.iterations;
  c.resolve();
  c.validate();
  return c;
}

Dataset load_data(const Options& o, LoadReport* report) {
  const ColumnMapping mapping =
      o.mapping.empty() ? ColumnMapping::canonical() : ColumnMapping::from_json_file(o.mapping);
  return load_dataset(o.data, mapping, report);
}

PlgBundle load_bundle(const fs::path& p) { return deserialise_bundle(read_file(p)); }

// `<artifact>.meta.json`: configuration echo plus a few facts about the artifact.
void write_meta(const fs::path& artifact, const RunConfig& config, nlohmann::ordered_json facts) {
  nlohmann::ordered_json j;
  j["artifact"] = artifact.filename().string();
  j["facts"] = std::move(facts);
  j["config"] = nlohmann::ordered_json::parse(config.to_json_text());
  fs::path meta = artifact;
  meta += ".meta.json";
  write_file_atomic(meta, j.dump(2) + "\n");
}

std::unique_ptr<ActionPolicy> load_policy(const fs::path& p) {
  const Bytes bytes = read_file(p);
  const Magic m = peek_magic(bytes);
  if (m == kPolicyMagic) return std::make_unique<ParametricPolicy>(deserialise_policy(bytes));
  if (m == kEmpiricalMagic) return std::make_unique<EmpiricalPolicy>(deserialise_empirical(bytes));
  throw FormatError(p.string() + ": not a policy file (wrong format tag)");
}

int cmd_synth(const Options& o, const RunConfig& c) {
  SyntheticSpec spec = SyntheticSpec::two_lane_merge();
  if (o.vehicles > 0) spec.vehicles = o.vehicles;
  if (o.ticks > 0) spec.ticks = o.ticks;
  if (o.lane_change_rate >= 0.0) spec.lane_change_rate = o.lane_change_rate;
  const Dataset data = generate_synthetic_corpus(spec, c.seed);
  write_dataset(o.out, data);
  progress("wrote " + std::to_string(data.sample_count()) + " samples of " +
           std::to_string(data.vehicle_count()) + " vehicles to " + o.out);
  return 0;
}

int cmd_build(const Options& o, const RunConfig& c) {
  LoadReport report;
  const Dataset data = load_data(o, &report);
  auto built = build_plg(data, c.build);
  std::vector<NodalPath> paths;
  for (const auto& t : built.tracks) paths.push_back(t.path);
  PlgBundle bundle{std::move(built.plg), build_conditional_table(paths)};
  write_file_atomic(o.out, serialise_bundle(bundle));
  for (const auto& w : built.warnings) progress("warning: " + w);
  nlohmann::ordered_json facts;
  facts["rows_read"] = report.rows_read;
  facts["rows_rejected"] = report.rejected.size();
  facts["vehicles"] = data.vehicle_count();
  facts["nodes"] = bundle.plg.size();
  facts["edges"] = bundle.plg.edge_count();
  facts["clusters"] = bundle.plg.clusters().size();
  write_meta(o.out, c, facts);
  progress("graph: " + std::to_string(bundle.plg.size()) + " nodes, " +
           std::to_string(bundle.plg.edge_count()) + " edges, " +
           std::to_string(bundle.plg.clusters().size()) + " exit clusters; " +
           std::to_string(report.rejected.size()) + " rows rejected");
  return 0;
}

int cmd_plan(const Options& o, const RunConfig& c) {
  const auto bundle = load_bundle(o.plg);
  if (!bundle.plg.valid(o.start)) throw InvalidArgument("start node out of range");
  if (o.target < 0 || static_cast<std::size_t>(o.target) >= bundle.plg.clusters().size()) {
    throw InvalidArgument("target cluster out of range");
  }
  const int max_len = c.sim.max_path_len > 0 ? c.sim.max_path_len : default_max_len(bundle.plg.size());
  std::ostringstream out;
  out << "index,log_prob,end,reached_cluster,fallback_used,nodes\n";
  for (int i = 0; i < o.paths; ++i) {
    Rng rng(mix_seed(c.seed, static_cast<std::uint64_t>(i)));
    const auto p = plan_path(bundle.table, bundle.plg, o.start, o.target, max_len, rng);
    const char* end = p.end == PathEnd::kReachedTarget ? "target" : p.end == PathEnd::kDeadEnd ? "dead_end" : "truncated";
    char buf[128];
    std::snprintf(buf, sizeof buf, "%d,%.17g,%s,%d,%d,", i, p.log_prob(), end, p.reached_cluster,
                  p.fallback_used ? 1 : 0);
    out << buf;
    for (std::size_t k = 0; k < p.nodes.size(); ++k) out << (k ? " " : "") << p.nodes[k];
    out << "\n";
  }
  if (o.out.empty()) {
    std::cout << out.str();
  } else {
    write_file_atomic(o.out, out.str());
  }
  return 0;
}

int cmd_fit(const Options& o, const RunConfig& c) {
  const Dataset data = load_data(o, nullptr);
  const auto bundle = load_bundle(o.plg);
  const auto tracks = discretise_dataset(data, bundle.plg);
  const auto obs = extract_observations(data, tracks, bundle.plg, c.risk);
  const auto policy = fit_empirical_policy(obs, c.risk.k_bv, c.policy_alpha);
  write_file_atomic(o.out, serialise_empirical(policy));
  nlohmann::ordered_json facts;
  facts["observations"] = obs.size();
  auto& bins = facts["bin_totals"] = nlohmann::ordered_json::array();
  for (int b = 0; b < kRiskBins; ++b) bins.push_back(policy.bin_total(b));
  write_meta(o.out, c, facts);
  progress("fitted action model on " + std::to_string(obs.size()) + " observations");
  return 0;
}

int cmd_seeds(const Options& o, const RunConfig& c) {
  const Dataset data = load_data(o, nullptr);
  const auto bundle = load_bundle(o.plg);
  const auto tracks = discretise_dataset(data, bundle.plg);
  const auto ex = extract_seed_states(data, tracks, bundle.plg, c.risk, c.seeds);
  write_file_atomic(o.out, serialise_seeds(ex));
  nlohmann::ordered_json facts;
  facts["seed_states"] = ex.seeds.size();
  facts["trajectories"] = ex.trajectory_count;
  facts["states"] = ex.state_count;
  facts["frames"] = ex.frame_count;
  write_meta(o.out, c, facts);
  progress(std::to_string(ex.seeds.size()) + " seed states from " + std::to_string(ex.trajectory_count) +
           " trajectories and " + std::to_string(ex.state_count) + " states");
  return 0;
}

int cmd_train(const Options& o, const RunConfig& c) {
  const auto bundle = load_bundle(o.plg);
  const auto empirical = deserialise_empirical(read_file(o.empirical));
  const auto seeds = deserialise_seeds(read_file(o.seeds));
  if (empirical.k_bv() != c.risk.k_bv) throw DataError("empirical policy k_bv differs from config");

  std::ostringstream metrics;
  metrics << "iteration,mean_reward,collision_rate,clip_fraction,mean_ratio\n";
  auto on_iteration = [&](const IterationMetrics& m) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", m.iteration, m.mean_reward,
                  m.collision_rate, m.clip_fraction, m.mean_ratio);
    metrics << buf;
    std::snprintf(buf, sizeof buf,
                  "iteration %d: mean reward %.4f, collision rate %.3f, clip fraction %.3f, ratio %.4f",
                  m.iteration, m.mean_reward, m.collision_rate, m.clip_fraction, m.mean_ratio);
    progress(buf);
  };
  const auto res = train(bundle.plg, bundle.table, empirical, seeds.seeds, c.sim, c.train, o.jobs, on_iteration);
  char buf[160];
  std::snprintf(buf, sizeof buf, "behaviour cloning: %d steps, discrepancy %.5f", res.clone.steps,
                res.clone.discrepancy);
  progress(buf);

  const std::string meta = c.to_json_text();
  write_file_atomic(o.policy, serialise_policy(res.params, meta));
  if (!o.initial_out.empty()) write_file_atomic(o.initial_out, serialise_policy(res.initial, meta));
  const std::string metrics_path = o.metrics.empty() ? o.policy + ".metrics.csv" : o.metrics;
  write_file_atomic(metrics_path, metrics.str());
  if (res.diverged) {
    progress("error: training diverged (" + res.error + "); last good parameters written");
    return 2;
  }
  return 0;
}

int cmd_simulate(const Options& o, const RunConfig& c) {
  const auto bundle = load_bundle(o.plg);
  const auto primary = load_policy(o.policy);
  const auto background = o.background.empty() ? nullptr : load_policy(o.background);
  const auto seeds = deserialise_seeds(read_file(o.seeds));
  const Policies policies{primary.get(), background ? background.get() : primary.get()};
  const auto batch = batch_simulate(seeds.seeds, o.episodes, c.sim, policies, bundle.table, bundle.plg, o.jobs);

  const fs::path dir(o.out);
  fs::create_directories(dir);
  std::ostringstream csv;
  write_episode_csv(csv, batch.episodes);
  write_file_atomic(dir / "episodes.csv", csv.str());
  write_file_atomic(dir / "episodes.json", episode_sidecar_json(batch.episodes, c.to_json_text()));
  write_file_atomic(dir / "plg.bin", read_file(o.plg));
  char buf[128];
  std::snprintf(buf, sizeof buf, "%zu episodes, corner-case rate %.4f", batch.episodes.size(),
                batch.corner_case_rate);
  progress(buf);
  return 0;
}

void render_collisions(const fs::path& dir, std::span<const Episode> episodes, const Plg& plg,
                       const RunConfig& c, int limit) {
  fs::create_directories(dir);
  write_file_atomic(dir / "plg.svg", render_plg(plg, c.render));
  int n = 0;
  for (const auto& ep : episodes) {
    if (!ep.collided() || n >= limit) continue;
    ++n;
    write_file_atomic(dir / ("episode_" + std::to_string(ep.id) + ".svg"), render_scenario(ep, plg, c.render));
  }
}

int cmd_analyse(const Options& o, const RunConfig& c) {
  const fs::path runs(o.runs);
  const fs::path plg_path = o.plg.empty() ? runs / "plg.bin" : fs::path(o.plg);
  const auto bundle = load_bundle(plg_path);
  auto episodes = read_episodes(runs / "episodes.csv", runs / "episodes.json");
  std::sort(episodes.begin(), episodes.end(), [](const Episode& a, const Episode& b) { return a.id < b.id; });

  std::vector<CornerCaseRecord> records;
  for (const auto& ep : episodes) {
    if (ep.collided()) records.push_back(classify(ep, bundle.plg, c.horizon));
  }
  const auto summary = summarise(records, episodes);
  auto report = nlohmann::ordered_json::parse(summary_json(summary, c.to_json_text()));
  auto& cases = report["corner_cases"] = nlohmann::ordered_json::array();
  for (const auto& r : records) {
    cases.push_back({{"episode_id", r.episode_id},
                     {"seed_index", r.seed_index},
                     {"class", std::string(to_string(r.classification))},
                     {"lane_changes", r.lane_changes},
                     {"vehicles", {r.first, r.second}},
                     {"node", r.node},
                     {"tick", r.tick}});
  }
  std::ifstream side(runs / "episodes.json");
  report["simulation_config"] = nlohmann::ordered_json::parse(side).at("config");
  write_file_atomic(o.out, report.dump(2) + "\n");
  if (!o.render_dir.empty()) render_collisions(o.render_dir, episodes, bundle.plg, c, o.max_renders);

  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu episodes, %zu collisions, r_cc %.4f", summary.episodes,
                summary.collisions, summary.corner_case_rate);
  progress(buf);
  return 0;
}

int cmd_render(const Options& o, const RunConfig& c) {
  const auto bundle = load_bundle(o.plg);
  if (o.runs.empty()) {
    write_file_atomic(o.out, render_plg(bundle.plg, c.render));
    return 0;
  }
  const fs::path runs(o.runs);
  const auto episodes = read_episodes(runs / "episodes.csv", runs / "episodes.json");
  for (const auto& ep : episodes) {
    if (static_cast<long long>(ep.id) == o.episode) {
      write_file_atomic(o.out, render_scenario(ep, bundle.plg, c.render));
      return 0;
    }
  }
  throw InvalidArgument("episode " + std::to_string(o.episode) + " not found in " + o.runs);
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Probabilistic lane graphs, risk-reactive traffic simulation and corner-case search"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", version_matrix());
  Options o;
  app.add_option("--config", o.config, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option_function<std::uint64_t>(
      "--seed", [&](const std::uint64_t& s) { o.seed = s; o.seed_given = true; }, "global random seed");
  app.add_option("--jobs", o.jobs, "parallel episode workers")->check(CLI::PositiveNumber);

  auto* synth = app.add_subcommand("synth-data", "generate a synthetic two-lane merge corpus");
  synth->add_option("--out", o.out, "output CSV")->required();
  synth->add_option("--vehicles", o.vehicles, "vehicle count")->check(CLI::PositiveNumber);
  synth->add_option("--ticks", o.ticks, "spawning horizon in ticks")->check(CLI::PositiveNumber);
  synth->add_option("--lane-change-rate", o.lane_change_rate, "discretionary lane changes per second");

  auto add_data = [&](CLI::App* sub) {
    sub->add_option("--data", o.data, "trajectory CSV")->required()->check(CLI::ExistingFile);
    sub->add_option("--mapping", o.mapping, "column mapping JSON")->check(CLI::ExistingFile);
  };

  auto* build = app.add_subcommand("build-plg", "learn a lane graph and its conditional table");
  add_data(build);
  build->add_option("--radius", o.radius, "node spacing R in metres")->check(CLI::PositiveNumber);
  build->add_option("--out", o.out, "output graph file")->required();

  auto* plan = app.add_subcommand("plan", "sample paths towards an exit cluster");
  plan->add_option("--plg", o.plg, "graph file")->required()->check(CLI::ExistingFile);
  plan->add_option("--start", o.start, "start node")->required();
  plan->add_option("--target", o.target, "target cluster")->required();
  plan->add_option("--n", o.paths, "number of paths")->check(CLI::PositiveNumber);
  plan->add_option("--out", o.out, "write CSV here instead of standard output");

  auto* fit = app.add_subcommand("fit-policy", "fit the empirical risk-conditioned action model");
  add_data(fit);
  fit->add_option("--plg", o.plg, "graph file")->required()->check(CLI::ExistingFile);
  fit->add_option("--out", o.out, "output policy file")->required();

  auto* seeds = app.add_subcommand("extract-seeds", "extract high-risk seed states from data");
  add_data(seeds);
  seeds->add_option("--plg", o.plg, "graph file")->required()->check(CLI::ExistingFile);
  seeds->add_option("--threshold", o.threshold, "MTTC threshold in seconds")->check(CLI::PositiveNumber);
  seeds->add_option("--out", o.out, "output seed file")->required();

  auto* tr = app.add_subcommand("train", "optimise the action policy with PPO");
  tr->add_option("--plg", o.plg, "graph file")->required()->check(CLI::ExistingFile);
  tr->add_option("--empirical", o.empirical, "empirical policy file")->required()->check(CLI::ExistingFile);
  tr->add_option("--seeds", o.seeds, "seed file")->required()->check(CLI::ExistingFile);
  tr->add_option("--policy-out", o.policy, "output checkpoint")->required();
  tr->add_option("--initial-out", o.initial_out, "also write the behaviour-cloned start policy");
  tr->add_option("--metrics", o.metrics, "metrics CSV (default <policy-out>.metrics.csv)");
  tr->add_option("--iterations", o.iterations, "PPO iterations")->check(CLI::NonNegativeNumber);

  auto* sim = app.add_subcommand("simulate", "run episodes from seed states");
  sim->add_option("--plg", o.plg, "graph file")->required()->check(CLI::ExistingFile);
  sim->add_option("--policy", o.policy, "policy checkpoint or empirical policy")->required()->check(CLI::ExistingFile);
  sim->add_option("--background", o.background, "policy for non-ego vehicles when sim.assignment is 'ego'")
      ->check(CLI::ExistingFile);
  sim->add_option("--seeds", o.seeds, "seed file")->required()->check(CLI::ExistingFile);
  sim->add_option("--episodes", o.episodes, "episode count")->check(CLI::PositiveNumber);
  sim->add_option("--out", o.out, "output directory")->required();

  auto* an = app.add_subcommand("analyse", "classify corner cases and summarise a run directory");
  an->add_option("--runs", o.runs, "run directory")->required()->check(CLI::ExistingDirectory);
  an->add_option("--T", o.horizon, "seconds before collision examined")->check(CLI::NonNegativeNumber);
  an->add_option("--out", o.out, "report JSON")->required();
  an->add_option("--render-dir", o.render_dir, "write SVG renderings here");
  an->add_option("--max-renders", o.max_renders, "collision scenarios to render")->check(CLI::NonNegativeNumber);
  an->add_option("--plg", o.plg, "graph file (default <runs>/plg.bin)")->check(CLI::ExistingFile);

  auto* rd = app.add_subcommand("render", "render a graph or one simulated episode to SVG");
  rd->add_option("--plg", o.plg, "graph file")->required()->check(CLI::ExistingFile);
  rd->add_option("--runs", o.runs, "run directory")->check(CLI::ExistingDirectory);
  rd->add_option("--episode", o.episode, "episode id to render");
  rd->add_option("--out", o.out, "output SVG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, std::cout, std::cerr);
    return code == 0 ? 0 : 1;
  }
  if (*rd && !o.runs.empty() && o.episode < 0) {
    std::cerr << "render: --episode is required with --runs\n" << rd->help();
    return 1;
  }

  try {
    const RunConfig c = load_config(o);
    if (*synth) return cmd_synth(o, c);
    if (*build) return cmd_build(o, c);
    if (*plan) return cmd_plan(o, c);
    if (*fit) return cmd_fit(o, c);
    if (*seeds) return cmd_seeds(o, c);
    if (*tr) return cmd_train(o, c);
    if (*sim) return cmd_simulate(o, c);
    if (*an) return cmd_analyse(o, c);
    if (*rd) return cmd_render(o, c);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace plg
