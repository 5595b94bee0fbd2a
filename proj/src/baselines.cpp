#include "bvl/baselines.hpp"

#include <chrono>
#include <cmath>

namespace bvl {

UniformRoadmap UniformRoadmap::build(const Environment& env, double spacing) {
  UniformRoadmap rm;
  rm.spacing = spacing;
  double r = env.robot_radius;
  for (double y = env.ymin + spacing / 2.0; y <= env.ymax - r; y += spacing) {
    for (double x = env.xmin + spacing / 2.0; x <= env.xmax - r; x += spacing) {
      State s{x, y, 0.0};
      if (collides_point(s, env)) continue;
      s.theta = wrap_angle(std::atan2(env.goal.y - y, env.goal.x - x));
      rm.targets.push_back(s);
    }
  }
  return rm;
}

int UniformRoadmap::nearest(double x, double y) const {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(targets.size()); ++i) {
    double d = std::hypot(targets[i].x - x, targets[i].y - y);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

HeuristicParams make_heuristic_params(const Environment& env, const MotionModel& mm,
                                      const ObservationModel& om, const CostWeights& cw) {
  HeuristicParams hp;
  hp.v_max = mm.v_max;
  hp.weights = cw;
  Linearization lin = linearize(env.goal, Control{}, env.landmarks, mm, om);
  hp.p_c_ref = stationary_filter_covariance(lin.A, lin.H, lin.Qw, lin.R_diag);
  return hp;
}

double urm_heuristic(const GaussianBelief& b, const State& goal, const HeuristicParams& params,
                     const MotionModel& mm) {
  double steps = planar_distance(b.mean, goal) / mm.step_length();
  return steps * params.per_step_cost();
}

void UrmDomain::menu(const Belief& b, std::vector<MenuAction>& out) const {
  out.clear();
  const auto& targets = roadmap->targets;
  if (targets.empty()) return;

  int stay_id = roadmap->nearest(b.mean.x, b.mean.y);

  // k nearest grid points with a collision-free straight segment.
  std::vector<std::pair<double, int>> order;
  order.reserve(targets.size());
  for (int i = 0; i < static_cast<int>(targets.size()); ++i) {
    order.emplace_back(std::hypot(targets[i].x - b.mean.x, targets[i].y - b.mean.y), i);
  }
  std::sort(order.begin(), order.end());

  for (const auto& [d, id] : order) {
    if (static_cast<int>(out.size()) >= k_neighbors) break;
    if (collides_segment({b.mean.x, b.mean.y, 0.0}, {targets[id].x, targets[id].y, 0.0},
                         *world->env)) {
      continue;
    }
    MenuAction a;
    a.action_id = id;
    a.target_id = id;
    a.heuristic_cost = heuristic_edge_cost(b, targets[id], world->cw, world->mm);
    a.terminal_value =
        urm_heuristic({targets[id], heuristic->p_c_ref}, goal_node.center.mean, *heuristic,
                      world->mm);
    if (id == stay_id) a.penalty = stay_penalty;
    out.push_back(a);
  }
}

UrmDomain::StepResult UrmDomain::step(const TrueState& x, const Belief& b, const MenuAction& a,
                                      Rng& rng) const {
  Control u = goto_law(roadmap->targets[a.action_id], b, gain, world->mm.v_max);
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

EpisodeLog urm_pomcp_plan_and_execute(const GaussianBelief& b0, const UniformRoadmap& roadmap,
                                      const FirmNode& goal_node, const SimWorld& world,
                                      const PlannerConfig& pc, const UrmConfig& uc,
                                      std::uint64_t seed, int step_cap) {
  auto t0 = std::chrono::steady_clock::now();

  HeuristicParams hp = make_heuristic_params(*world.env, world.mm, world.om, world.cw);

  UrmDomain domain;
  domain.roadmap = &roadmap;
  domain.world = &world;
  domain.heuristic = &hp;
  domain.goal_node = goal_node;
  domain.gain = holonomic_gain(world.mm, LqgWeights{}).gain;
  domain.k_neighbors = pc.k_neighbors;
  domain.stay_penalty =
      uc.stay_penalty_factor * (world.cw.xi_p * hp.p_c_ref.trace() + world.cw.xi_T * world.cw.dt);

  BeliefTree<UrmDomain> tree(
      &domain, make_tree_config(pc, resolve_eta_q(pc, b0, world.cw), BackupRule::MonteCarloReturn));

  Rng episode_rng(seed);
  Rng exec_rng = episode_rng.derive(stream::kEpisodeExec);
  Rng search_rng = episode_rng.derive(stream::kEpisodeSearch);

  EpisodeLog log;
  log.planner = "urm-pomcp";
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
      int nn = roadmap.nearest(b.mean.x, b.mean.y);
      if (nn < 0) {
        log.outcome = Outcome::Error;
        break;
      }
      u = goto_law(roadmap.targets[nn], b, domain.gain, world.mm.v_max);
    } else {
      u = goto_law(roadmap.targets[res.action.action_id], b, domain.gain, world.mm.v_max);
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

namespace {

// Closed-loop traversal committed to one controller until its target ball,
// a collision, or the step cap; shared by OGR scoring and FIRM execution
// semantics.
struct Traversal {
  bool reached = false;
  bool collided = false;
  double cost = 0.0;
  int steps = 0;
};

Traversal traverse_to_node(const GaussianBelief& b0, const State& x0, const FirmNode& target,
                           const Eigen::Matrix3d& gain, const SimWorld& world,
                           const BeliefMetric& metric, int cap, Rng& rng) {
  Traversal t;
  GaussianBelief b = b0;
  State x = x0;
  for (int k = 0; k < cap; ++k) {
    if (is_in_node(b, target, metric)) {
      t.reached = true;
      return t;
    }
    Control u = goto_law(target.center.mean, b, gain, world.mm.v_max);
    auto [xp, z] = generative_step(x, u, world.env->landmarks, world.mm, world.om, rng);
    if (motion_collides(x, xp, *world.env)) {
      t.collided = true;
      return t;
    }
    b = ekf_update(ekf_predict(b, u, world.mm), z, world.om, world.env->landmarks);
    t.cost += step_cost(b, world.cw);
    t.steps += 1;
    x = xp;
  }
  return t;
}

}  // namespace

Control ogr_step(const GaussianBelief& b, const FirmGraph& graph, const SimWorld& world,
                 const PlannerConfig& pc, const OgrConfig& oc, Rng& rng, bool* fallback) {
  if (fallback != nullptr) *fallback = false;
  std::vector<int> cands = neighbors_of_belief(graph, b, pc.k_neighbors, *world.env);
  if (cands.empty()) {
    if (fallback != nullptr) *fallback = true;
    int nn = nearest_node(graph, b);
    return goto_law(graph.nodes[nn].center.mean, b, graph.gain, world.mm.v_max);
  }

  int best = cands[0];
  double best_score = std::numeric_limits<double>::infinity();
  for (int id : cands) {
    const FirmNode& target = graph.nodes[id];
    double cost_sum = 0.0;
    int reached = 0;
    for (int run = 0; run < oc.n_og; ++run) {
      State x0 = sample_state(b, rng);
      Traversal t = traverse_to_node(b, x0, target, graph.gain, world, graph.metric,
                                     pc.bridge_cap, rng);
      cost_sum += t.cost;
      if (t.reached) reached += 1;
    }
    double p_succ = static_cast<double>(reached) / oc.n_og;
    double score =
        cost_sum / oc.n_og + p_succ * graph.J[id] + (1.0 - p_succ) * graph.j_fail;
    if (score < best_score) {
      best_score = score;
      best = id;
    }
  }
  return goto_law(graph.nodes[best].center.mean, b, graph.gain, world.mm.v_max);
}

EpisodeLog ogr_plan_and_execute(const GaussianBelief& b0, const FirmGraph& graph,
                                const SimWorld& world, const PlannerConfig& pc,
                                const OgrConfig& oc, std::uint64_t seed, int step_cap) {
  auto t0 = std::chrono::steady_clock::now();

  Rng episode_rng(seed);
  Rng exec_rng = episode_rng.derive(stream::kEpisodeExec);
  Rng search_rng = episode_rng.derive(stream::kEpisodeSearch);

  EpisodeLog log;
  log.planner = "ogr";
  log.seed = seed;
  log.outcome = Outcome::Cap;

  GaussianBelief b = b0;
  State x = sample_state(b0, exec_rng);

  for (int k = 0; k < step_cap; ++k) {
    if (is_in_node(b, graph.goal(), graph.metric)) {
      log.outcome = Outcome::Goal;
      break;
    }

    bool fb = false;
    Control u = ogr_step(b, graph, world, pc, oc, search_rng, &fb);
    log.fallback_used = log.fallback_used || fb;

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

    x = st.x;
    b = st.b;
  }

  log.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return log;
}

EpisodeLog firm_execute(const GaussianBelief& b0, const FirmGraph& graph, const SimWorld& world,
                        const FirmExecConfig& fc, std::uint64_t seed, int step_cap) {
  auto t0 = std::chrono::steady_clock::now();

  Rng episode_rng(seed);
  Rng exec_rng = episode_rng.derive(stream::kEpisodeExec);

  EpisodeLog log;
  log.planner = "firm";
  log.seed = seed;
  log.outcome = Outcome::Cap;

  GaussianBelief b = b0;
  State x = sample_state(b0, exec_rng);

  int entry = nearest_node(graph, b);
  if (entry < 0 || graph.J[entry] >= graph.j_fail) {
    log.outcome = Outcome::Error;  // no feasible policy from here
    log.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return log;
  }

  int k = 0;
  auto record_step = [&](const SimWorld::ExecStep& st, const Control& u) {
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
    log.n_steps = ++k;
  };

  // Stabilize to the entry node.
  {
    const FirmNode& node = graph.nodes[entry];
    int stab = 0;
    while (!is_in_node(b, node, graph.metric)) {
      if (k >= step_cap || ++stab > fc.stabilization_cap) {
        log.outcome = Outcome::Cap;
        log.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return log;
      }
      Control u = goto_law(node.center.mean, b, graph.gain, world.mm.v_max);
      SimWorld::ExecStep st = world.execute(x, b, u, exec_rng);
      if (st.collided) {
        log.outcome = Outcome::Collision;
        log.n_steps = k + 1;
        log.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return log;
      }
      record_step(st, u);
      x = st.x;
      b = st.b;
    }
  }

  int current = entry;
  while (k < step_cap) {
    if (is_in_node(b, graph.goal(), graph.metric)) {
      log.outcome = Outcome::Goal;
      break;
    }
    int eid = graph.policy[current];
    if (eid < 0) {
      log.outcome = Outcome::Error;
      break;
    }
    const FirmEdge& edge = graph.edges[eid];
    const FirmNode& target = graph.nodes[edge.to];

    bool advanced = false;
    int nominal = edge.controller.nominal_steps();
    for (int ek = 0; k < step_cap; ++ek) {
      if (is_in_node(b, target, graph.metric)) {
        advanced = true;
        break;
      }
      if (ek - nominal >= fc.stabilization_cap) break;
      Control u = apply_edge_controller(edge.controller, b, ek, world.mm.v_max);
      SimWorld::ExecStep st = world.execute(x, b, u, exec_rng);
      if (st.collided) {
        log.outcome = Outcome::Collision;
        log.n_steps = k + 1;
        log.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return log;
      }
      record_step(st, u);
      x = st.x;
      b = st.b;
    }
    if (!advanced) {
      log.outcome = Outcome::Cap;
      break;
    }
    current = edge.to;
  }

  log.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return log;
}

}  // namespace bvl
