#pragma once

#include "bvl/episode.hpp"
#include "bvl/firm.hpp"
#include "bvl/tree.hpp"

namespace bvl {

// Online planner parameters. eta_q < 0 requests the default
// 2*sqrt(2)*step_cost(b0), scaled to the problem's cost magnitude.
struct PlannerConfig {
  int n_p = 500;
  int k_sr = 30;
  double eta_q = -1.0;
  double eta_w = 0.05;
  int k_neighbors = 5;
  double delta_match = 0.1;
  int bridge_cap = 600;
  bool reuse_tree = true;
};

double resolve_eta_q(const PlannerConfig& pc, const GaussianBelief& b0, const CostWeights& cw);

// Straight-line travel time to the node priced at the current uncertainty:
// C^j = ceil(dist / (v_max dt)) * step_cost(b).
double heuristic_edge_cost(const GaussianBelief& b, const State& target, const CostWeights& cw,
                           const MotionModel& mm);

// Search domain over the FIRM graph: menus steer toward the k nearest graph
// nodes and terminal values bootstrap the offline cost-to-go.
struct RoverDomain {
  using TrueState = State;
  using Belief = GaussianBelief;

  const FirmGraph* graph = nullptr;
  const SimWorld* world = nullptr;
  int k_neighbors = 5;

  struct StepResult {
    State state;
    GaussianBelief belief;
    double cost = 0.0;
    bool collided = false;
  };

  double j_fail() const { return graph->j_fail; }
  BridgeMode bridge_mode() const { return BridgeMode::ToTargetNode; }
  bool is_goal(const Belief& b) const { return is_in_node(b, graph->goal(), graph->metric); }
  double belief_distance(const Belief& a, const Belief& b) const {
    return bvl::belief_distance(a, b, graph->metric);
  }
  TrueState sample_state(const Belief& b, Rng& rng) const { return bvl::sample_state(b, rng); }
  void menu(const Belief& b, std::vector<MenuAction>& out) const;
  StepResult step(const TrueState& x, const Belief& b, const MenuAction& a, Rng& rng) const;
  bool in_target_ball(const Belief& b, int target_id) const {
    return is_in_node(b, graph->nodes[target_id], graph->metric);
  }
  double heuristic_value(const Belief&) const { return graph->j_fail; }  // not used
};

using BvlTree = BeliefTree<RoverDomain>;

TreeConfig make_tree_config(const PlannerConfig& pc, double eta_q, BackupRule rule);

// The execute-replan loop: search, execute one control on the simulated true
// state, observe, filter, repeat until the goal node ball, a collision, or
// the step cap.
EpisodeLog bvl_plan_and_execute(const GaussianBelief& b0, const FirmGraph& graph,
                                const SimWorld& world, const PlannerConfig& pc,
                                std::uint64_t seed, int step_cap);

}  // namespace bvl
