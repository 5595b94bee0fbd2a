#pragma once

#include "bvl/bvl.hpp"
#include "bvl/episode.hpp"
#include "bvl/firm.hpp"
#include "bvl/tree.hpp"

namespace bvl {

// Uniformly spaced roadmap of controller targets covering free space.
struct UniformRoadmap {
  std::vector<State> targets;  // collision-free lattice points, heading faces the goal
  double spacing = 1.0;

  static UniformRoadmap build(const Environment& env, double spacing);

  // Index of the target nearest to (x, y); -1 when the roadmap is empty.
  int nearest(double x, double y) const;
};

// Parameters of the straight-line-time heuristic cost-to-go.
struct HeuristicParams {
  double v_max = 1.0;
  CostWeights weights;
  Eigen::Matrix3d p_c_ref = Eigen::Matrix3d::Zero();  // stationary covariance proxy

  double per_step_cost() const { return weights.xi_p * p_c_ref.trace() + weights.xi_T * weights.dt; }
};

// P_c_ref evaluated at the goal pose (the filter's stationary covariance
// there), the natural reference for a goal-directed heuristic.
HeuristicParams make_heuristic_params(const Environment& env, const MotionModel& mm,
                                      const ObservationModel& om, const CostWeights& cw);

// J~(b) = (d(b, b_g) / (v_max dt)) * (xi_p tr(P_c) + xi_T dt): straight-line
// travel time to the goal priced at the stationary covariance.
double urm_heuristic(const GaussianBelief& b, const State& goal, const HeuristicParams& params,
                     const MotionModel& mm);

struct UrmConfig {
  double spacing = 1.0;
  double stay_penalty_factor = 2.0;  // times the reference step cost
};

// Search domain for URM-POMCP. Identical tree mechanics to the graph-bridged
// domain except: actions target roadmap grid points, terminal values come
// from the heuristic, and the action toward the current nearest grid point
// carries the stay penalty.
struct UrmDomain {
  using TrueState = State;
  using Belief = GaussianBelief;

  const UniformRoadmap* roadmap = nullptr;
  const SimWorld* world = nullptr;
  const HeuristicParams* heuristic = nullptr;
  FirmNode goal_node;  // termination ball, shared with the other planners
  Eigen::Matrix3d gain = Eigen::Matrix3d::Zero();
  int k_neighbors = 5;
  double stay_penalty = 0.0;
  double fail_value = 1e6;

  struct StepResult {
    State state;
    GaussianBelief belief;
    double cost = 0.0;
    bool collided = false;
  };

  double j_fail() const { return fail_value; }
  BridgeMode bridge_mode() const { return BridgeMode::ImmediateHeuristic; }
  bool is_goal(const Belief& b) const { return is_in_node(b, goal_node, world->metric); }
  double belief_distance(const Belief& a, const Belief& b) const {
    return bvl::belief_distance(a, b, world->metric);
  }
  TrueState sample_state(const Belief& b, Rng& rng) const { return bvl::sample_state(b, rng); }
  void menu(const Belief& b, std::vector<MenuAction>& out) const;
  StepResult step(const TrueState& x, const Belief& b, const MenuAction& a, Rng& rng) const;
  bool in_target_ball(const Belief&, int) const { return false; }  // not used
  double heuristic_value(const Belief& b) const {
    return urm_heuristic(b, goal_node.center.mean, *heuristic, world->mm);
  }
};

// POMCP over the uniform roadmap with the original Monte Carlo backup.
EpisodeLog urm_pomcp_plan_and_execute(const GaussianBelief& b0, const UniformRoadmap& roadmap,
                                      const FirmNode& goal_node, const SimWorld& world,
                                      const PlannerConfig& pc, const UrmConfig& uc,
                                      std::uint64_t seed, int step_cap);

struct OgrConfig {
  int n_og = 20;  // Monte Carlo traversals per candidate per decision
};

// One-step full-width graph rollout: scores every candidate controller by
// fresh Monte Carlo traversals to its target node, executes one step of the
// best, and discards the simulations.
Control ogr_step(const GaussianBelief& b, const FirmGraph& graph, const SimWorld& world,
                 const PlannerConfig& pc, const OgrConfig& oc, Rng& rng, bool* fallback);

EpisodeLog ogr_plan_and_execute(const GaussianBelief& b0, const FirmGraph& graph,
                                const SimWorld& world, const PlannerConfig& pc,
                                const OgrConfig& oc, std::uint64_t seed, int step_cap);

struct FirmExecConfig {
  int stabilization_cap = 400;
};

// Plain execution of the offline policy: stabilize to the nearest node, then
// follow the policy's edge controllers node to node.
EpisodeLog firm_execute(const GaussianBelief& b0, const FirmGraph& graph, const SimWorld& world,
                        const FirmExecConfig& fc, std::uint64_t seed, int step_cap);

}  // namespace bvl
