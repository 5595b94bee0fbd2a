#include "bvl/firm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "bvl/parallel.hpp"
#include "json.hpp"

namespace bvl {

FirmGraph build_graph(const Environment& env, const FirmBuildParams& params, Rng& rng,
                      const MotionModel& mm, const ObservationModel& om, const LqgWeights& lqg,
                      const BeliefMetric& metric) {
  if (params.n_nodes < 1) throw std::invalid_argument("build_graph: n_nodes must be >= 1");

  FirmGraph g;
  g.metric = metric;
  g.j_fail = params.j_fail;
  g.env_hash = environment_hash(env);

  DareSolution dare = holonomic_gain(mm, lqg);
  g.gain = dare.gain;

  Rng node_rng = rng.derive(stream::kGraphNodes);
  auto add_node = [&](const State& v) {
    Linearization lin = linearize(v, Control{}, env.landmarks, mm, om);
    Eigen::Matrix3d pc = stationary_filter_covariance(lin.A, lin.H, lin.Qw, lin.R_diag);
    FirmNode node;
    node.id = static_cast<int>(g.nodes.size());
    node.center.mean = v;
    node.center.cov = pc;
    node.epsilon = params.epsilon;
    g.nodes.push_back(std::move(node));
  };

  // Goal node first, then sampled nodes. Samples where the stationary filter
  // recursion fails (too little landmark coverage) are rejected like
  // colliding ones; FIRM nodes only make sense where the belief can be
  // stabilized.
  try {
    add_node(env.goal);
  } catch (const SynthesisError& e) {
    throw InfeasibleEnvironmentError(std::string("build_graph: goal node: ") + e.what());
  }
  long attempts = 0;
  const long max_attempts = 200L * params.n_nodes;
  while (static_cast<int>(g.nodes.size()) < params.n_nodes) {
    if (++attempts > max_attempts) {
      throw InfeasibleEnvironmentError(
          "build_graph: could not place the requested nodes (observable free space too small)");
    }
    State v = sample_free_state(env, node_rng);
    bool distinct = true;
    for (const FirmNode& n : g.nodes) {
      if (planar_distance(n.center.mean, v) < 1e-6) {
        distinct = false;
        break;
      }
    }
    if (!distinct) continue;
    try {
      add_node(v);
    } catch (const SynthesisError&) {
      continue;
    }
  }

  // PRM edges: ordered pairs within the connection radius whose straight
  // segment is collision-free.
  g.out_edges.assign(g.nodes.size(), {});
  for (const FirmNode& a : g.nodes) {
    for (const FirmNode& b : g.nodes) {
      if (a.id == b.id) continue;
      if (planar_distance(a.center.mean, b.center.mean) > params.connect_radius) continue;
      try {
        EdgeController ctrl =
            make_edge_controller(a.center.mean, b.center.mean, env, mm, lqg);
        FirmEdge e;
        e.id = static_cast<int>(g.edges.size());
        e.from = a.id;
        e.to = b.id;
        e.controller = std::move(ctrl);
        g.out_edges[a.id].push_back(e.id);
        g.edges.push_back(std::move(e));
      } catch (const EdgeRejectedError&) {
      }
    }
  }
  return g;
}

namespace {

struct EdgeRun {
  bool reached = false;
  bool collided = false;
  double cost = 0.0;
  int steps = 0;
};

EdgeRun run_edge_once(const FirmGraph& graph, const FirmEdge& edge, Rng& rng,
                      const Environment& env, const MotionModel& mm, const ObservationModel& om,
                      const CostWeights& cw, int edge_step_cap, int stabilization_cap) {
  const FirmNode& target = graph.nodes[edge.to];
  GaussianBelief b = graph.nodes[edge.from].center;
  State x = sample_state(b, rng);

  EdgeRun run;
  int nominal = edge.controller.nominal_steps();
  int cap = std::max(edge_step_cap, nominal + stabilization_cap);
  for (int k = 0;; ++k) {
    if (is_in_node(b, target, graph.metric)) {
      run.reached = true;
      return run;
    }
    if (k >= cap || k - nominal >= stabilization_cap) return run;

    Control u = apply_edge_controller(edge.controller, b, k, mm.v_max);
    auto [xp, z] = generative_step(x, u, env.landmarks, mm, om, rng);
    if (motion_collides(x, xp, env)) {
      run.collided = true;
      return run;
    }
    b = ekf_update(ekf_predict(b, u, mm), z, om, env.landmarks);
    run.cost += step_cost(b, cw);
    run.steps += 1;
    x = xp;
  }
}

}  // namespace

EdgeEvalResult evaluate_edge(const FirmGraph& graph, const FirmEdge& edge, int n_mc, Rng rng,
                             const Environment& env, const MotionModel& mm,
                             const ObservationModel& om, const CostWeights& cw,
                             int edge_step_cap, int stabilization_cap) {
  if (n_mc < 1) throw std::invalid_argument("evaluate_edge: n_mc must be >= 1");
  double cost_success = 0.0;
  double cost_all = 0.0;
  int n_success = 0;
  for (int i = 0; i < n_mc; ++i) {
    EdgeRun run = run_edge_once(graph, edge, rng, env, mm, om, cw, edge_step_cap,
                                stabilization_cap);
    cost_all += run.cost;
    if (run.reached) {
      n_success += 1;
      cost_success += run.cost;
    }
  }
  EdgeEvalResult res;
  res.n_success = n_success;
  res.p_success = static_cast<double>(n_success) / n_mc;
  res.cost = n_success > 0 ? cost_success / n_success : cost_all / n_mc;
  return res;
}

void evaluate_all_edges(FirmGraph& graph, int n_mc, const Rng& base_rng, const Environment& env,
                        const MotionModel& mm, const ObservationModel& om, const CostWeights& cw,
                        int edge_step_cap, int stabilization_cap, int jobs) {
  const int n = static_cast<int>(graph.edges.size());
  parallel_for(n, jobs, [&](int i) {
    FirmEdge& e = graph.edges[i];
    Rng rng = base_rng.derive(stream::kEdgeEvalBase + static_cast<std::uint64_t>(e.id));
    EdgeEvalResult r = evaluate_edge(graph, e, n_mc, rng, env, mm, om, cw, edge_step_cap,
                                     stabilization_cap);
    e.cost = r.cost;
    e.outcomes = {{e.to, r.p_success}};
    e.p_fail = 1.0 - r.p_success;
    e.mc_samples = n_mc;
  });
}

void value_iteration(FirmGraph& graph, double j_fail) {
  const int n = static_cast<int>(graph.nodes.size());
  graph.j_fail = j_fail;
  graph.J.assign(n, j_fail);
  graph.policy.assign(n, -1);
  graph.J[graph.goal_node] = 0.0;

  const double tol = std::max(1e-12, 1e-14 * j_fail);
  const int max_sweeps = 100000;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_delta = 0.0;
    for (int i = 0; i < n; ++i) {
      if (i == graph.goal_node) continue;
      double best = j_fail;
      int best_edge = -1;
      for (int eid : graph.out_edges[i]) {
        const FirmEdge& e = graph.edges[eid];
        double q = e.cost + e.p_fail * j_fail;
        for (const auto& [succ, p] : e.outcomes) q += p * graph.J[succ];
        if (q < best) {
          best = q;
          best_edge = eid;
        }
      }
      max_delta = std::max(max_delta, std::abs(best - graph.J[i]));
      graph.J[i] = best;
      graph.policy[i] = best_edge;
    }
    if (max_delta < tol) break;
  }
}

double bellman_residual(const FirmGraph& graph) {
  double worst = 0.0;
  for (const FirmNode& node : graph.nodes) {
    if (node.id == graph.goal_node) continue;
    double best = graph.j_fail;
    for (int eid : graph.out_edges[node.id]) {
      const FirmEdge& e = graph.edges[eid];
      double q = e.cost + e.p_fail * graph.j_fail;
      for (const auto& [succ, p] : e.outcomes) q += p * graph.J[succ];
      best = std::min(best, q);
    }
    worst = std::max(worst, std::abs(best - graph.J[node.id]));
  }
  return worst;
}

std::vector<double> policy_chain_risk(const FirmGraph& graph) {
  const int n = static_cast<int>(graph.nodes.size());
  std::vector<double> rho(n, 1.0);
  rho[graph.goal_node] = 0.0;
  // Minimal fixed point of rho(i) = p_fail + sum_j p_j rho(j) along the policy.
  std::vector<double> next(n);
  for (int iter = 0; iter < 100000; ++iter) {
    double max_delta = 0.0;
    for (int i = 0; i < n; ++i) {
      if (i == graph.goal_node) {
        next[i] = 0.0;
        continue;
      }
      int eid = graph.policy.empty() ? -1 : graph.policy[i];
      if (eid < 0) {
        next[i] = 1.0;
        continue;
      }
      const FirmEdge& e = graph.edges[eid];
      double r = e.p_fail;
      for (const auto& [succ, p] : e.outcomes) r += p * rho[succ];
      next[i] = std::min(1.0, r);
      max_delta = std::max(max_delta, std::abs(next[i] - rho[i]));
    }
    rho.swap(next);
    if (max_delta < 1e-13) break;
  }
  return rho;
}

std::vector<int> neighbors_of_belief(const FirmGraph& graph, const GaussianBelief& b, int k,
                                     const Environment& env) {
  const int n = static_cast<int>(graph.nodes.size());
  if (n == 0 || k <= 0) return {};

  // Mean-part distances lower-bound the composite metric, so nodes can be
  // examined in mean-part order and the walk stopped once no remaining node
  // can beat the kth admitted composite distance.
  struct Entry {
    double mean_part;
    int id;
    bool operator<(const Entry& o) const {  // max-heap -> invert
      if (mean_part != o.mean_part) return mean_part > o.mean_part;
      return id > o.id;
    }
  };
  std::vector<Entry> heap;
  heap.reserve(n);
  const BeliefMetric& m = graph.metric;
  for (const FirmNode& node : graph.nodes) {
    double dx = m.wx * (b.mean.x - node.center.mean.x);
    double dy = m.wy * (b.mean.y - node.center.mean.y);
    double dth = m.w_theta * wrap_angle(b.mean.theta - node.center.mean.theta);
    heap.push_back({std::sqrt(dx * dx + dy * dy + dth * dth), node.id});
  }
  std::make_heap(heap.begin(), heap.end());

  std::vector<std::pair<double, int>> admitted;  // (composite distance, id)
  while (!heap.empty()) {
    std::pop_heap(heap.begin(), heap.end());
    Entry e = heap.back();
    heap.pop_back();
    if (static_cast<int>(admitted.size()) >= k && e.mean_part >= admitted.back().first) break;

    const FirmNode& node = graph.nodes[e.id];
    double d = e.mean_part + m.xi_sigma * (b.cov - node.center.cov).norm();
    if (static_cast<int>(admitted.size()) >= k && d >= admitted.back().first) continue;
    if (collides_segment({b.mean.x, b.mean.y, 0.0},
                         {node.center.mean.x, node.center.mean.y, 0.0}, env)) {
      continue;
    }
    admitted.emplace_back(d, e.id);
    std::sort(admitted.begin(), admitted.end());
    if (static_cast<int>(admitted.size()) > k) admitted.pop_back();
  }

  std::vector<int> out;
  out.reserve(admitted.size());
  for (const auto& [d, id] : admitted) out.push_back(id);
  return out;
}

int nearest_node(const FirmGraph& graph, const GaussianBelief& b) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (const FirmNode& node : graph.nodes) {
    double d = belief_distance(b, node.center, graph.metric);
    if (d < best_d) {
      best_d = d;
      best = node.id;
    }
  }
  return best;
}

namespace {

constexpr int kGraphSchemaVersion = 1;

nlohmann::json mat3_to_json(const Eigen::Matrix3d& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < 3; ++i) rows.push_back({m(i, 0), m(i, 1), m(i, 2)});
  return rows;
}

Eigen::Matrix3d mat3_from_json(const nlohmann::json& j) {
  Eigen::Matrix3d m;
  for (int i = 0; i < 3; ++i) {
    for (int c = 0; c < 3; ++c) m(i, c) = j.at(i).at(c);
  }
  return m;
}

nlohmann::json state_to_json(const State& s) { return {s.x, s.y, s.theta}; }

State state_from_json(const nlohmann::json& j) { return {j.at(0), j.at(1), j.at(2)}; }

}  // namespace

std::string serialize_graph(const FirmGraph& graph) {
  nlohmann::json j;
  j["schema_version"] = kGraphSchemaVersion;
  j["env_hash"] = graph.env_hash;
  j["goal_node"] = graph.goal_node;
  j["j_fail"] = graph.j_fail;
  j["metric"] = {{"wx", graph.metric.wx},
                 {"wy", graph.metric.wy},
                 {"w_theta", graph.metric.w_theta},
                 {"xi_sigma", graph.metric.xi_sigma}};
  j["gain"] = mat3_to_json(graph.gain);

  auto nodes = nlohmann::json::array();
  for (const FirmNode& n : graph.nodes) {
    nodes.push_back({{"id", n.id},
                     {"mean", state_to_json(n.center.mean)},
                     {"cov", mat3_to_json(n.center.cov)},
                     {"epsilon", n.epsilon}});
  }
  j["nodes"] = std::move(nodes);

  auto edges = nlohmann::json::array();
  for (const FirmEdge& e : graph.edges) {
    nlohmann::json je;
    je["id"] = e.id;
    je["from"] = e.from;
    je["to"] = e.to;
    je["cost"] = e.cost;
    auto outcomes = nlohmann::json::array();
    for (const auto& [succ, p] : e.outcomes) outcomes.push_back({succ, p});
    je["outcomes"] = std::move(outcomes);
    je["p_fail"] = e.p_fail;
    je["mc_samples"] = e.mc_samples;
    nlohmann::json jc;
    jc["from"] = state_to_json(e.controller.from);
    jc["to"] = state_to_json(e.controller.to);
    jc["dt"] = e.controller.dt;
    auto segs = nlohmann::json::array();
    for (const auto& s : e.controller.segments) {
      segs.push_back({s.u.vx, s.u.vy, s.u.vtheta, s.steps});
    }
    jc["segments"] = std::move(segs);
    je["controller"] = std::move(jc);
    edges.push_back(std::move(je));
  }
  j["edges"] = std::move(edges);

  if (!graph.J.empty()) j["J"] = graph.J;
  if (!graph.policy.empty()) j["policy"] = graph.policy;
  return j.dump();
}

FirmGraph deserialize_graph(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw GraphIoError(std::string("graph parse error: ") + e.what());
  }
  try {
    if (j.at("schema_version").get<int>() != kGraphSchemaVersion) {
      throw GraphIoError("graph schema version mismatch (expected " +
                         std::to_string(kGraphSchemaVersion) + ", got " +
                         j.at("schema_version").dump() + ")");
    }
    FirmGraph g;
    g.env_hash = j.at("env_hash").get<std::uint64_t>();
    g.goal_node = j.at("goal_node");
    g.j_fail = j.at("j_fail");
    g.metric.wx = j.at("metric").at("wx");
    g.metric.wy = j.at("metric").at("wy");
    g.metric.w_theta = j.at("metric").at("w_theta");
    g.metric.xi_sigma = j.at("metric").at("xi_sigma");
    g.gain = mat3_from_json(j.at("gain"));
    for (const auto& jn : j.at("nodes")) {
      FirmNode n;
      n.id = jn.at("id");
      n.center.mean = state_from_json(jn.at("mean"));
      n.center.cov = mat3_from_json(jn.at("cov"));
      n.epsilon = jn.at("epsilon");
      g.nodes.push_back(std::move(n));
    }
    g.out_edges.assign(g.nodes.size(), {});
    for (const auto& je : j.at("edges")) {
      FirmEdge e;
      e.id = je.at("id");
      e.from = je.at("from");
      e.to = je.at("to");
      e.cost = je.at("cost");
      for (const auto& o : je.at("outcomes")) {
        e.outcomes.emplace_back(o.at(0).get<int>(), o.at(1).get<double>());
      }
      e.p_fail = je.at("p_fail");
      e.mc_samples = je.at("mc_samples");
      const auto& jc = je.at("controller");
      e.controller.from = state_from_json(jc.at("from"));
      e.controller.to = state_from_json(jc.at("to"));
      e.controller.dt = jc.at("dt");
      for (const auto& s : jc.at("segments")) {
        e.controller.segments.push_back({Control{s.at(0), s.at(1), s.at(2)}, s.at(3)});
      }
      e.controller.gain = g.gain;
      g.out_edges[e.from].push_back(e.id);
      g.edges.push_back(std::move(e));
    }
    if (j.contains("J")) g.J = j.at("J").get<std::vector<double>>();
    if (j.contains("policy")) g.policy = j.at("policy").get<std::vector<int>>();
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw GraphIoError(std::string("malformed graph document: ") + e.what());
  }
}

void save_graph(const FirmGraph& graph, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw GraphIoError("cannot open for writing: " + path);
  f << serialize_graph(graph);
  if (!f) throw GraphIoError("write failed: " + path);
}

FirmGraph load_graph(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw GraphIoError("cannot open: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return deserialize_graph(ss.str());
}

}  // namespace bvl
