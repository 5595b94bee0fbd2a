#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "bvl/firm.hpp"
#include "bvl/rng.hpp"
#include "bvl/tree.hpp"

namespace bvl {

// Small discrete belief MDP used as ground truth: explicit transition
// kernels, absorbing goal and failure sets.
struct DiscreteAction {
  double cost = 0.0;
  std::vector<std::pair<int, double>> successors;  // state -> probability
};

struct DiscreteBeliefMdp {
  int n_states = 0;
  std::vector<std::vector<DiscreteAction>> actions;  // empty at terminal states
  std::vector<bool> goal;
  std::vector<bool> fail;
  int start = 0;

  bool is_terminal(int s) const { return goal[s] || fail[s]; }
  // Throws std::invalid_argument when kernels are not row-stochastic within
  // 1e-12 or terminals carry actions.
  void validate() const;
  // Number of deterministic stationary policies (product of action counts).
  double policy_count() const;
};

std::string mdp_to_json(const DiscreteBeliefMdp& mdp);
DiscreteBeliefMdp mdp_from_json(const std::string& text);

using DiscretePolicy = std::vector<int>;  // action index per state (-1 at terminals)

// Exact cost-to-go of a fixed policy: linear solve with the goal pinned at 0
// and failures at j_fail. States with a nonzero probability of never
// terminating are detected by reachability analysis and valued j_fail.
Eigen::VectorXd exact_policy_cost(const DiscreteBeliefMdp& mdp, const DiscretePolicy& policy,
                                  double j_fail);

// Probability of ever entering the failure set before the goal (the minimal
// fixed point of the risk recursion); rho = 0 on goals, 1 on failures.
Eigen::VectorXd exact_policy_risk(const DiscreteBeliefMdp& mdp, const DiscretePolicy& policy);

struct OracleRefusal : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EnumerationResult {
  std::vector<DiscretePolicy> cost_argmin;  // tie set, lexicographic order
  std::vector<DiscretePolicy> risk_argmin;
  double best_cost = 0.0;  // at the start state
  double best_risk = 0.0;
};

// Exhaustive evaluation of every deterministic stationary policy, compared at
// the start state; ties resolved within 1e-9 relative tolerance. Refuses via
// OracleRefusal when the policy count exceeds 10^6. jobs as in parallel_for.
EnumerationResult enumerate_optimal(const DiscreteBeliefMdp& mdp, double j_fail, int jobs = 1);

struct ExpectimaxResult {
  int action = -1;
  double value = 0.0;
};

// Exact depth-limited min-expectation recursion with caller-supplied leaf
// values (typically exact_policy_cost of a continuation policy). Refuses when
// branching^depth exceeds 10^7.
ExpectimaxResult expectimax_action(const DiscreteBeliefMdp& mdp, int s0, int depth,
                                   const Eigen::VectorXd& leaf_values, double j_fail);

// Lowest-id continuation policy, the conventional all-terminal continuation
// for leaf values.
DiscretePolicy first_action_policy(const DiscreteBeliefMdp& mdp);

// Adapter: one graph node per non-terminal state plus a merged goal node so
// the graph value iteration can be cross-checked against the enumeration.
FirmGraph graph_from_mdp(const DiscreteBeliefMdp& mdp, double j_fail);

// Maps the graph adapter's J back onto mdp states (goal -> 0).
std::vector<double> graph_j_on_states(const DiscreteBeliefMdp& mdp, const FirmGraph& graph);

// Tree-search domain over a discrete MDP; action menus carry one-step costs
// and expected continuation values from value_hint.
struct DiscreteDomain {
  using TrueState = int;
  using Belief = int;

  const DiscreteBeliefMdp* mdp = nullptr;
  std::vector<double> value_hint;  // per-state J~ (0 on goals, j_fail on failures)
  double fail_value = 1e6;

  struct StepResult {
    int state = 0;
    int belief = 0;
    double cost = 0.0;
    bool collided = false;
  };

  double j_fail() const { return fail_value; }
  BridgeMode bridge_mode() const { return BridgeMode::ImmediateHeuristic; }
  bool is_goal(const Belief& b) const { return mdp->goal[b]; }
  double belief_distance(const Belief& a, const Belief& b) const { return a == b ? 0.0 : 1e18; }
  TrueState sample_state(const Belief& b, Rng&) const { return b; }
  void menu(const Belief& b, std::vector<MenuAction>& out) const;
  StepResult step(const TrueState& x, const Belief& b, const MenuAction& a, Rng& rng) const;
  bool in_target_ball(const Belief&, int) const { return false; }
  double heuristic_value(const Belief& b) const;
};

DiscreteDomain make_discrete_domain(const DiscreteBeliefMdp& mdp, double j_fail);

}  // namespace bvl
