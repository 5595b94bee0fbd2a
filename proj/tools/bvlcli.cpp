#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "bvl/config.hpp"
#include "bvl/runner.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitInfeasible = 2;

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << content;
}

struct RunSummary {
  int collisions = 0;
  int goals = 0;
  int caps = 0;
  int errors = 0;
  double mean_cost = 0.0;   // over goal outcomes
  double mean_steps = 0.0;  // over goal outcomes
};

RunSummary summarize(const std::vector<bvl::MetricsRow>& rows, const std::string& planner) {
  RunSummary s;
  double cost = 0.0, steps = 0.0;
  for (const auto& r : rows) {
    if (r.planner != planner) continue;
    if (r.outcome == "goal") {
      s.goals += 1;
      cost += r.total_cost;
      steps += r.steps;
    } else if (r.outcome == "collision") {
      s.collisions += 1;
    } else if (r.outcome == "cap") {
      s.caps += 1;
    } else {
      s.errors += 1;
    }
  }
  if (s.goals > 0) {
    s.mean_cost = cost / s.goals;
    s.mean_steps = steps / s.goals;
  }
  return s;
}

void print_run_summary(const bvl::ExperimentConfig& cfg,
                       const std::vector<bvl::MetricsRow>& rows) {
  int n = cfg.n_runs;
  for (const std::string& p : cfg.planners) {
    RunSummary s = summarize(rows, p);
    std::cout << p << ": goal " << s.goals << "/" << n << ", collision prob "
              << static_cast<double>(s.collisions) / n;
    if (s.goals > 0) {
      std::cout << ", mean cost " << s.mean_cost << ", mean steps " << s.mean_steps;
    }
    if (s.caps > 0) std::cout << ", caps " << s.caps;
    if (s.errors > 0) std::cout << ", errors " << s.errors;
    std::cout << "\n";
  }
}

void write_batch(const bvl::ExperimentConfig& cfg, const bvl::BatchResult& batch,
                 const fs::path& out_dir) {
  write_file(out_dir / "metrics.csv", bvl::metrics_to_csv(batch.rows));
  write_file(out_dir / "timings.csv", bvl::timings_to_csv(batch.rows));
  for (const bvl::EpisodeLog& log : batch.logs) {
    std::ostringstream name;
    name << log.planner << "-seed" << log.seed << ".jsonl";
    write_file(out_dir / "logs" / name.str(), bvl::episode_to_jsonl(log));
  }
  (void)cfg;
}

int cmd_build_graph(const bvl::ExperimentConfig& cfg, const fs::path& out_dir) {
  bvl::Environment env = bvl::generate_rnp(cfg.rnp, cfg.geometry);
  bvl::FirmGraph graph = bvl::build_graph_for_config(cfg, env);
  fs::path path = out_dir / "graph.json";
  bvl::save_graph(graph, path.string());

  bvl::GaussianBelief b0 = cfg.initial_belief(env);
  int near = bvl::nearest_node(graph, b0);
  std::cout << "graph: " << graph.nodes.size() << " nodes, " << graph.edges.size()
            << " edges -> " << path.string() << "\n";
  std::cout << "J at start-adjacent node " << near << ": " << graph.J[near] << "\n";
  return kExitOk;
}

int cmd_run(const bvl::ExperimentConfig& cfg, const std::string& graph_path,
            const fs::path& out_dir) {
  bvl::Environment env = bvl::generate_rnp(cfg.rnp, cfg.geometry);

  std::optional<bvl::FirmGraph> graph;
  bool needs_graph = false;
  for (const std::string& p : cfg.planners) {
    if (p == "bvl" || p == "ogr" || p == "firm") needs_graph = true;
  }
  if (needs_graph) {
    if (graph_path.empty()) {
      std::cerr << "error: selected planners need --graph\n";
      return kExitConfig;
    }
    graph = bvl::load_graph(graph_path);
    if (graph->env_hash != bvl::environment_hash(env)) {
      std::cerr << "error: graph was built for a different environment\n";
      return kExitConfig;
    }
  }

  bvl::BatchResult batch = bvl::run_batch(cfg, env, graph ? &*graph : nullptr);
  write_batch(cfg, batch, out_dir);
  print_run_summary(cfg, batch.rows);
  std::cout << "metrics -> " << (out_dir / "metrics.csv").string() << "\n";
  return kExitOk;
}

int cmd_sweep(bvl::ExperimentConfig cfg, const std::string& axis,
              const std::vector<double>& values, const fs::path& out_dir) {
  std::vector<bvl::SweepCell> cells;
  for (double v : values) {
    bvl::ExperimentConfig cell_cfg = cfg;
    if (axis == "obstacle_o") {
      cell_cfg.rnp.o = v;
    } else {
      cell_cfg.firm.n_nodes = static_cast<int>(v);
    }
    try {
      bvl::Environment env = bvl::generate_rnp(cell_cfg.rnp, cell_cfg.geometry);
      bvl::FirmGraph graph = bvl::build_graph_for_config(cell_cfg, env);
      bvl::BatchResult batch = bvl::run_batch(cell_cfg, env, &graph);
      cells.push_back({axis, v, std::move(batch.rows)});
      std::cout << axis << "=" << v << ": done (" << cells.back().rows.size() << " rows)\n";
    } catch (const std::exception& e) {
      std::cerr << axis << "=" << v << ": failed: " << e.what() << "\n";
      cells.push_back({axis, v, {}});
    }
  }
  write_file(out_dir / "sweep.csv", bvl::sweep_to_csv(cells));
  std::cout << "sweep -> " << (out_dir / "sweep.csv").string() << "\n";
  return kExitOk;
}

int cmd_score(const std::string& metrics_path, const std::string& out_path) {
  std::ifstream f(metrics_path);
  if (!f) {
    std::cerr << "error: cannot open " << metrics_path << "\n";
    return kExitConfig;
  }
  std::ostringstream ss;
  ss << f.rdbuf();
  auto rows = bvl::metrics_from_csv(ss.str());
  auto scores = bvl::compute_scores(rows);
  std::string csv = bvl::scores_to_csv(scores);
  if (out_path.empty()) {
    std::cout << csv;
  } else {
    write_file(out_path, csv);
    std::cout << "scores -> " << out_path << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rover navigation planning benchmark suite"};
  app.require_subcommand(1);

  std::string config_path;
  std::string graph_path;
  std::string out_dir = "out";
  std::string metrics_path;
  std::string out_path;
  std::string axis = "obstacle_o";
  std::vector<double> values;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::optional<int> jobs;
  std::optional<int> nodes;
  std::vector<std::string> planners;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", config_path, "experiment config JSON");
    if (needs_config) opt->required();
    sub->add_option("--out", out_dir, "output directory");
  };

  CLI::App* build = app.add_subcommand("build-graph", "offline planning: build the belief graph");
  add_common(build, true);
  build->add_option("--nodes", nodes, "override firm.n_nodes");
  build->add_option("--seed", seed, "override firm.seed");
  build->add_option("--jobs", jobs, "parallel workers (0 = all cores)");

  CLI::App* run = app.add_subcommand("run", "run seeded episode batches");
  add_common(run, true);
  run->add_option("--graph", graph_path, "graph file from build-graph");
  run->add_option("--seed", seed, "override run.base_seed");
  run->add_option("--runs", runs, "override run.n_runs");
  run->add_option("--planner", planners, "planner selection (repeatable)");
  run->add_option("--jobs", jobs, "parallel workers (0 = all cores)");

  CLI::App* sweep = app.add_subcommand("sweep", "run a parameter sweep");
  add_common(sweep, true);
  sweep->add_option("--axis", axis, "obstacle_o or firm_nodes")
      ->check(CLI::IsMember({"obstacle_o", "firm_nodes"}));
  sweep->add_option("--values", values, "axis values")->required();
  sweep->add_option("--planner", planners, "planner selection (repeatable)");
  sweep->add_option("--jobs", jobs, "parallel workers (0 = all cores)");

  CLI::App* score = app.add_subcommand("score", "optimality/safety scores from metrics");
  score->add_option("--metrics", metrics_path, "metrics.csv path")->required();
  score->add_option("--out", out_path, "output CSV (stdout when omitted)");

  CLI::App* envx = app.add_subcommand("env-export", "write the environment JSON");
  add_common(envx, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (score->parsed()) return cmd_score(metrics_path, out_path);

    bvl::ExperimentConfig cfg = bvl::load_config(config_path);
    if (seed && run->parsed()) cfg.base_seed = *seed;
    if (seed && build->parsed()) cfg.firm_seed = *seed;
    if (runs) cfg.n_runs = *runs;
    if (jobs) cfg.jobs = *jobs;
    if (nodes) cfg.firm.n_nodes = *nodes;
    if (!planners.empty()) {
      for (const auto& p : planners) {
        if (!bvl::is_known_planner(p)) throw bvl::ConfigError("unknown planner: " + p);
      }
      cfg.planners = planners;
    }

    if (build->parsed()) return cmd_build_graph(cfg, out_dir);
    if (run->parsed()) return cmd_run(cfg, graph_path, out_dir);
    if (sweep->parsed()) return cmd_sweep(cfg, axis, values, out_dir);
    if (envx->parsed()) {
      bvl::Environment env = bvl::generate_rnp(cfg.rnp, cfg.geometry);
      fs::path path = fs::path(out_dir) / "environment.json";
      write_file(path, bvl::serialize_environment(env));
      std::cout << "environment -> " << path.string() << "\n";
      return kExitOk;
    }
  } catch (const bvl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const bvl::InfeasibleSpecError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const bvl::InfeasibleEnvironmentError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
