#include "bvl/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "bvl/baselines.hpp"
#include "bvl/parallel.hpp"

namespace bvl {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string metrics_to_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream out;
  out << "planner,env,seed,outcome,steps,total_cost,sum_trace\r\n";
  for (const MetricsRow& r : rows) {
    out << r.planner << "," << r.env << "," << r.seed << "," << r.outcome << "," << r.steps
        << "," << format_double(r.total_cost) << "," << format_double(r.sum_trace) << "\r\n";
  }
  return out.str();
}

std::string timings_to_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream out;
  out << "planner,seed,wall_time_s\r\n";
  for (const MetricsRow& r : rows) {
    out << r.planner << "," << r.seed << "," << format_double(r.wall_time_s) << "\r\n";
  }
  return out.str();
}

std::vector<MetricsRow> metrics_from_csv(const std::string& text) {
  std::vector<MetricsRow> rows;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      first = false;
      continue;
    }
    std::istringstream ls(line);
    std::string field;
    MetricsRow r;
    std::getline(ls, r.planner, ',');
    std::getline(ls, r.env, ',');
    std::getline(ls, field, ',');
    r.seed = std::stoull(field);
    std::getline(ls, r.outcome, ',');
    std::getline(ls, field, ',');
    r.steps = std::stoi(field);
    std::getline(ls, field, ',');
    r.total_cost = std::stod(field);
    std::getline(ls, field, ',');
    r.sum_trace = std::stod(field);
    rows.push_back(std::move(r));
  }
  return rows;
}

MetricsRow metrics_from_episode(const EpisodeLog& log, const std::string& env_name) {
  MetricsRow r;
  r.planner = log.planner;
  r.env = env_name;
  r.seed = log.seed;
  r.outcome = to_string(log.outcome);
  r.steps = log.n_steps;
  r.total_cost = log.total_cost;
  r.sum_trace = log.sum_trace;
  r.wall_time_s = log.wall_time_s;
  return r;
}

FirmGraph build_graph_for_config(const ExperimentConfig& cfg, const Environment& env) {
  Rng rng(cfg.firm_seed);
  FirmBuildParams params = cfg.firm;
  params.jobs = cfg.jobs;
  FirmGraph graph =
      build_graph(env, params, rng, cfg.motion, cfg.observation, cfg.lqg, cfg.metric);
  evaluate_all_edges(graph, params.n_mc, rng, env, cfg.motion, cfg.observation, cfg.cost,
                     params.edge_step_cap, params.stabilization_cap, params.jobs);
  value_iteration(graph, params.j_fail);
  return graph;
}

BatchResult run_batch(const ExperimentConfig& cfg, const Environment& env,
                      const FirmGraph* graph) {
  for (const std::string& p : cfg.planners) {
    bool needs_graph = p == "bvl" || p == "ogr" || p == "firm";
    if (needs_graph && (graph == nullptr || !graph->valued())) {
      throw ConfigError("planner '" + p + "' needs a valued graph");
    }
  }

  SimWorld world;
  world.env = &env;
  world.mm = cfg.motion;
  world.om = cfg.observation;
  world.cw = cfg.cost;
  world.metric = cfg.metric;

  GaussianBelief b0 = cfg.initial_belief(env);
  std::string env_name = rnp_name(cfg.rnp);

  // The goal termination ball, identical for every planner.
  FirmNode goal_node;
  if (graph != nullptr) {
    goal_node = graph->goal();
  } else {
    StationaryLqg goal_ctrl =
        make_node_controller(env.goal, env, cfg.motion, cfg.observation, cfg.lqg);
    goal_node.id = 0;
    goal_node.center.mean = env.goal;
    goal_node.center.cov = goal_ctrl.stationary_cov;
    goal_node.epsilon = cfg.firm.epsilon;
  }

  std::optional<UniformRoadmap> roadmap;
  if (std::count(cfg.planners.begin(), cfg.planners.end(), "urm-pomcp") > 0) {
    roadmap = UniformRoadmap::build(env, cfg.urm.spacing);
  }

  struct Task {
    std::string planner;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (const std::string& p : cfg.planners) {
    for (int i = 0; i < cfg.n_runs; ++i) {
      tasks.push_back({p, cfg.base_seed + static_cast<std::uint64_t>(i)});
    }
  }

  BatchResult result;
  result.logs.resize(tasks.size());
  parallel_for(static_cast<int>(tasks.size()), cfg.jobs, [&](int i) {
    const Task& t = tasks[i];
    EpisodeLog log;
    try {
      if (t.planner == "bvl") {
        log = bvl_plan_and_execute(b0, *graph, world, cfg.planner, t.seed, cfg.step_cap);
      } else if (t.planner == "urm-pomcp") {
        log = urm_pomcp_plan_and_execute(b0, *roadmap, goal_node, world, cfg.planner, cfg.urm,
                                         t.seed, cfg.step_cap);
      } else if (t.planner == "ogr") {
        log = ogr_plan_and_execute(b0, *graph, world, cfg.planner, cfg.ogr, t.seed,
                                   cfg.step_cap);
      } else {
        log = firm_execute(b0, *graph, world, cfg.firm_exec, t.seed, cfg.step_cap);
      }
    } catch (const std::exception&) {
      log = EpisodeLog{};
      log.planner = t.planner;
      log.seed = t.seed;
      log.outcome = Outcome::Error;
    }
    log.env_name = rnp_name(cfg.rnp);
    result.logs[i] = std::move(log);
  });

  result.rows.reserve(tasks.size());
  for (const EpisodeLog& log : result.logs) {
    result.rows.push_back(metrics_from_episode(log, env_name));
  }
  return result;
}

std::vector<ScoreRow> compute_scores(const std::vector<MetricsRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("compute_scores: empty metrics");

  std::vector<std::string> order;
  std::map<std::string, std::vector<const MetricsRow*>> by_planner;
  for (const MetricsRow& r : rows) {
    if (by_planner.find(r.planner) == by_planner.end()) order.push_back(r.planner);
    by_planner[r.planner].push_back(&r);
  }

  std::vector<ScoreRow> scores;
  double min_mean_cost = std::numeric_limits<double>::infinity();
  for (const std::string& p : order) {
    ScoreRow s;
    s.planner = p;
    double cost_sum = 0.0;
    for (const MetricsRow* r : by_planner[p]) {
      s.n_runs += 1;
      if (r->outcome == "goal") {
        s.n_success += 1;
        cost_sum += r->total_cost;
      }
    }
    if (s.n_success > 0) {
      min_mean_cost = std::min(min_mean_cost, cost_sum / s.n_success);
    }
    s.safety = 1.0 - static_cast<double>(s.n_runs - s.n_success) / s.n_runs;
    scores.push_back(s);
  }
  for (ScoreRow& s : scores) {
    if (s.n_success == 0) {
      s.optimality = 0.0;
      s.flagged = true;
      continue;
    }
    double cost_sum = 0.0;
    for (const MetricsRow* r : by_planner[s.planner]) {
      if (r->outcome == "goal") cost_sum += r->total_cost;
    }
    s.optimality = min_mean_cost / (cost_sum / s.n_success);
  }
  return scores;
}

std::string scores_to_csv(const std::vector<ScoreRow>& rows) {
  std::ostringstream out;
  out << "planner,n_runs,n_success,optimality_score,safety_score,flagged\r\n";
  for (const ScoreRow& r : rows) {
    out << r.planner << "," << r.n_runs << "," << r.n_success << ","
        << format_double(r.optimality) << "," << format_double(r.safety) << ","
        << (r.flagged ? 1 : 0) << "\r\n";
  }
  return out.str();
}

std::string sweep_to_csv(const std::vector<SweepCell>& cells) {
  std::ostringstream out;
  out << "axis,axis_value,planner,env,seed,outcome,steps,total_cost,sum_trace\r\n";
  for (const SweepCell& c : cells) {
    for (const MetricsRow& r : c.rows) {
      out << c.axis << "," << format_double(c.axis_value) << "," << r.planner << "," << r.env
          << "," << r.seed << "," << r.outcome << "," << r.steps << ","
          << format_double(r.total_cost) << "," << format_double(r.sum_trace) << "\r\n";
    }
  }
  return out.str();
}

}  // namespace bvl
