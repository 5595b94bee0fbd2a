#include "bvl/bvl.hpp"

#include <chrono>
#include <cmath>

namespace bvl {

double resolve_eta_q(const PlannerConfig& pc, const GaussianBelief& b0, const CostWeights& cw) {
  if (pc.eta_q >= 0.0) return pc.eta_q;
  return 2.0 * std::sqrt(2.0) * step_cost(b0, cw);
}

double heuristic_edge_cost(const GaussianBelief& b, const State& target, const CostWeights& cw,
                           const MotionModel& mm) {
  double dist = planar_distance(b.mean, target);
  double steps = std::ceil(dist / mm.step_length());
  return steps * step_cost(b, cw);
}

void RoverDomain::menu(const Belief& b, std::vector<MenuAction>& out) const {
  out.clear();
  std::vector<int> near = neighbors_of_belief(*graph, b, k_neighbors, *world->env);
  out.reserve(near.size());
  for (int id : near) {
    MenuAction a;
    a.action_id = id;
    a.target_id = id;
    a.heuristic_cost = heuristic_edge_cost(b, graph->nodes[id].center.mean, world->cw, world->mm);
    a.terminal_value = graph->J[id];
    out.push_back(a);
  }
}

RoverDomain::StepResult RoverDomain::step(const TrueState& x, const Belief& b,
                                          const MenuAction& a, Rng& rng) const {
  Control u = goto_law(graph->nodes[a.action_id].center.mean, b, graph->gain, world->mm.v_max);
  StepResult out;
  auto [xp, z] = generative_step(x, u, world->env->landmarks, world->mm, world->om, rng);
  out.state = xp;
  if (motion_collides(x, xp, *world->env)) {
    out.collided = true;
    out.belief = b;
    return out;
  }
  out.belief = ekf_update(ekf_predict(b, u, world->mm), z, world->om, world->env->landmarks);
  out.cost = step_cost(out.belief, world->cw);
  return out;
}

TreeConfig make_tree_config(const PlannerConfig& pc, double eta_q, BackupRule rule) {
  TreeConfig tc;
  tc.n_p = pc.n_p;
  tc.k_sr = pc.k_sr;
  tc.eta_q = eta_q;
  tc.eta_w = pc.eta_w;
  tc.delta_match = pc.delta_match;
  tc.bridge_cap = pc.bridge_cap;
  tc.backup = rule;
  return tc;
}

EpisodeLog bvl_plan_and_execute(const GaussianBelief& b0, const FirmGraph& graph,
                                const SimWorld& world, const PlannerConfig& pc,
                                std::uint64_t seed, int step_cap) {
  auto t0 = std::chrono::steady_clock::now();

  RoverDomain domain;
  domain.graph = &graph;
  domain.world = &world;
  domain.k_neighbors = pc.k_neighbors;

  BvlTree tree(&domain, make_tree_config(pc, resolve_eta_q(pc, b0, world.cw), BackupRule::JValue));

  Rng episode_rng(seed);
  Rng exec_rng = episode_rng.derive(stream::kEpisodeExec);
  Rng search_rng = episode_rng.derive(stream::kEpisodeSearch);

  EpisodeLog log;
  log.planner = "bvl";
  log.seed = seed;
  log.outcome = Outcome::Cap;

  GaussianBelief b = b0;
  State x = sample_state(b0, exec_rng);

  for (int k = 0; k < step_cap; ++k) {
    if (domain.is_goal(b)) {
      log.outcome = Outcome::Goal;
      break;
    }

    auto res = tree.search(b, search_rng);
    Control u;
    if (res.fallback) {
      log.fallback_used = true;
      int nn = nearest_node(graph, b);
      u = goto_law(graph.nodes[nn].center.mean, b, graph.gain, world.mm.v_max);
    } else {
      u = goto_law(graph.nodes[res.action.action_id].center.mean, b, graph.gain,
                   world.mm.v_max);
    }

    SimWorld::ExecStep st = world.execute(x, b, u, exec_rng);
    if (st.collided) {
      log.outcome = Outcome::Collision;
      log.n_steps = k + 1;
      break;
    }

    log.total_cost += st.cost;
    log.sum_trace += st.b.cov.trace();
    StepRecord rec;
    rec.k = k;
    rec.state = st.x;
    rec.control = u;
    rec.obs_count = static_cast<int>(st.z.readings.size());
    rec.obs_hash = observation_hash(st.z);
    rec.belief_mean = st.b.mean;
    rec.cov_trace = st.b.cov.trace();
    rec.step_cost = st.cost;
    rec.cum_cost = log.total_cost;
    log.steps.push_back(rec);
    log.n_steps = k + 1;

    if (pc.reuse_tree && !res.fallback) {
      tree.advance(res.action_index, st.b);
    } else {
      tree.reset();
    }

    x = st.x;
    b = st.b;
  }

  log.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return log;
}

}  // namespace bvl
