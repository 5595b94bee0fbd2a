#include <cmath>

#include "bvl/oracle.hpp"
#include "bvl/tree.hpp"
#include "doctest.h"

using namespace bvl;

namespace {

// Scripted domain for exercising individual engine branches. Beliefs are
// plain doubles with |a - b| as the metric; step() appends the chosen action
// id and the belief it was applied to onto a trace.
struct ScriptDomain {
  using TrueState = int;
  using Belief = double;

  struct StepResult {
    int state = 0;
    double belief = 0.0;
    double cost = 0.0;
    bool collided = false;
  };

  std::vector<MenuAction> fixed_menu;
  double fail_value = 1000.0;
  BridgeMode mode = BridgeMode::ToTargetNode;
  bool ball = true;              // in_target_ball result
  double step_cost_value = 1.0;
  bool collide = false;
  double child_spread = 0.0;     // 0: all children identical; >0: rng offset
  mutable std::vector<std::pair<double, int>> trace;  // (belief, action id)

  double j_fail() const { return fail_value; }
  BridgeMode bridge_mode() const { return mode; }
  bool is_goal(const Belief&) const { return false; }
  double belief_distance(const Belief& a, const Belief& b) const { return std::abs(a - b); }
  TrueState sample_state(const Belief&, Rng&) const { return 0; }
  void menu(const Belief&, std::vector<MenuAction>& out) const { out = fixed_menu; }
  StepResult step(const TrueState&, const Belief& b, const MenuAction& a, Rng& rng) const {
    trace.emplace_back(b, a.action_id);
    double next = b + 10.0;
    if (child_spread > 0.0) next += rng.uniform(0.0, child_spread);
    return {0, next, step_cost_value, collide};
  }
  bool in_target_ball(const Belief&, int) const { return ball; }
  double heuristic_value(const Belief&) const { return 0.0; }
};

MenuAction make_action(int id, double c, double j) {
  MenuAction a;
  a.action_id = id;
  a.target_id = id;
  a.heuristic_cost = c;
  a.terminal_value = j;
  return a;
}

TreeConfig script_config(int n_p, int k_sr = 1, double eta_q = 1.0, double eta_w = 0.0) {
  TreeConfig tc;
  tc.n_p = n_p;
  tc.k_sr = k_sr;
  tc.eta_q = eta_q;
  tc.eta_w = eta_w;
  tc.delta_match = 0.1;
  tc.bridge_cap = 50;
  return tc;
}

}  // namespace

TEST_CASE("root visit count is N_p minus the first-visit rollout") {
  ScriptDomain d;
  d.fixed_menu = {make_action(0, 1.0, 5.0), make_action(1, 1.0, 6.0)};
  d.child_spread = 100.0;  // every child is a fresh node
  BeliefTree<ScriptDomain> tree(&d, script_config(100));
  Rng rng(1);
  tree.search(0.0, rng);
  REQUIRE(tree.root() != nullptr);
  CHECK(tree.root()->n == 99);
  CHECK(tree.invariants_hold());
}

TEST_CASE("bridge return: belief already in the target ball adds no cost") {
  ScriptDomain d;
  d.fixed_menu = {make_action(0, 2.0, 7.0)};
  d.ball = true;
  d.child_spread = 100.0;
  BeliefTree<ScriptDomain> tree(&d, script_config(2));
  Rng rng(2);
  auto res = tree.search(0.0, rng);
  CHECK_FALSE(res.fallback);
  // Second simulation: one tree step (cost 1) + rollout step (cost 1), then
  // the bridge sees the ball immediately and returns J~ = 7.
  CHECK(tree.root()->actions[0].q == 9.0);
  CHECK(tree.root()->actions[0].n == 1);
}

TEST_CASE("collision during simulation mixes j_fail into Q by the running mean") {
  ScriptDomain d;
  d.fixed_menu = {make_action(0, 1.0, 5.0)};
  d.collide = true;
  d.step_cost_value = 3.0;
  BeliefTree<ScriptDomain> tree(&d, script_config(4));
  Rng rng(3);
  tree.search(0.0, rng);
  // First sim creates the root via rollout; each later one backs up
  // R = cost + j_fail = 1003, so the running mean equals 1003.
  CHECK(tree.root()->actions[0].q == doctest::Approx(1003.0).epsilon(1e-12));
  CHECK(tree.root()->actions[0].n == 3);
  CHECK(tree.root()->j == doctest::Approx(1003.0));
}

TEST_CASE("greedy root selection: argmin Q, single action regardless of Q") {
  ScriptDomain d;
  d.fixed_menu = {make_action(0, 2.0, 3.0), make_action(1, 2.0, 5.0)};
  BeliefTree<ScriptDomain> tree(&d, script_config(1));
  Rng rng(4);
  auto res = tree.search(0.0, rng);
  CHECK(res.action_index == 0);  // init Q = (5, 7)

  ScriptDomain single;
  single.fixed_menu = {make_action(0, 100.0, 900.0)};
  BeliefTree<ScriptDomain> tree1(&single, script_config(1));
  auto res1 = tree1.search(0.0, rng);
  CHECK(res1.action_index == 0);
}

TEST_CASE("empty menu at the root falls back") {
  ScriptDomain d;  // fixed_menu empty
  BeliefTree<ScriptDomain> tree(&d, script_config(5));
  Rng rng(5);
  auto res = tree.search(0.0, rng);
  CHECK(res.fallback);
}

namespace {

// Every draw of a single-simulation search on a fresh tree comes from the
// rollout policy (the root is created on that same simulation, so the tree
// policy never runs).
double rollout_pick_fraction(ScriptDomain& d, double eta_w, int draws, int seed) {
  BeliefTree<ScriptDomain> tree(&d, script_config(1, 1, 1.0, eta_w));
  Rng rng(seed);
  long n0 = 0, total = 0;
  for (int i = 0; i < draws; ++i) {
    d.trace.clear();
    tree.reset();
    tree.search(0.0, rng);
    for (const auto& [belief, action] : d.trace) {
      total += 1;
      if (action == 0) n0 += 1;
    }
  }
  REQUIRE(total >= draws);
  return static_cast<double>(n0) / total;
}

}  // namespace

TEST_CASE("rollout samples controllers proportionally to 1/(C+J)") {
  ScriptDomain d;
  d.fixed_menu = {make_action(0, 4.0, 6.0), make_action(1, 10.0, 20.0)};  // denominators 10, 30
  d.ball = true;
  CHECK(std::abs(rollout_pick_fraction(d, 0.0, 20000, 6) - 0.75) < 0.01);
}

TEST_CASE("eta_w -> infinity makes the rollout uniform") {
  ScriptDomain d;
  d.fixed_menu = {make_action(0, 4.0, 6.0), make_action(1, 10.0, 20.0)};
  d.ball = true;
  CHECK(std::abs(rollout_pick_fraction(d, 1e6, 20000, 7) - 0.5) < 0.01);
}

TEST_CASE("belief matching: repeats merge, spread separates, advance picks nearest") {
  SUBCASE("identical children merge into one node") {
    ScriptDomain d;
    d.fixed_menu = {make_action(0, 1.0, 5.0)};
    d.child_spread = 0.0;
    BeliefTree<ScriptDomain> tree(&d, script_config(20, 3));
    Rng rng(8);
    tree.search(0.0, rng);
    // Root plus one node per depth level.
    CHECK(tree.node_count() <= 4);
  }
  SUBCASE("children beyond delta_match become separate nodes") {
    ScriptDomain d;
    d.fixed_menu = {make_action(0, 1.0, 5.0)};
    d.child_spread = 1000.0;
    BeliefTree<ScriptDomain> tree(&d, script_config(20, 1));
    Rng rng(9);
    tree.search(0.0, rng);
    CHECK(tree.node_count() == 20);  // root + one fresh leaf per backup sim
  }
}

TEST_CASE("J-backup: deterministic chain converges to c1 + c2 + J_T") {
  DiscreteBeliefMdp mdp;
  mdp.n_states = 3;
  mdp.goal = {false, false, false};
  mdp.fail = {false, false, false};
  mdp.actions.resize(3);
  mdp.actions[0].push_back({1.5, {{1, 1.0}}});
  mdp.actions[1].push_back({2.25, {{2, 1.0}}});
  mdp.actions[2].push_back({0.0, {{2, 1.0}}});  // self loop past the horizon
  mdp.start = 0;

  DiscreteDomain d;
  d.mdp = &mdp;
  d.fail_value = 1e6;
  d.value_hint = {0.0, 0.0, 4.75};  // J_T at the horizon state

  TreeConfig tc;
  tc.n_p = 8;
  tc.k_sr = 1;
  tc.eta_q = 1.0;
  tc.delta_match = 0.5;
  BeliefTree<DiscreteDomain> tree(&d, tc);
  Rng rng(10);
  tree.search(0, rng);
  CHECK(tree.root()->actions[0].q == doctest::Approx(1.5 + 2.25 + 4.75).epsilon(1e-12));
  CHECK(tree.root()->j == doctest::Approx(8.5).epsilon(1e-12));
  CHECK(tree.invariants_hold());
}

TEST_CASE("eta_q = 0 exploits the better of two tried actions") {
  DiscreteBeliefMdp mdp;
  mdp.n_states = 2;
  mdp.goal = {false, true};
  mdp.fail = {false, false};
  mdp.actions.resize(2);
  mdp.actions[0].push_back({1.0, {{1, 1.0}}});
  mdp.actions[0].push_back({2.0, {{1, 1.0}}});
  mdp.start = 0;
  mdp.validate();

  DiscreteDomain d = make_discrete_domain(mdp, 1e6);
  TreeConfig tc;
  tc.n_p = 50;
  tc.k_sr = 3;
  tc.eta_q = 0.0;
  tc.delta_match = 0.5;
  BeliefTree<DiscreteDomain> tree(&d, tc);
  Rng rng(11);
  auto res = tree.search(0, rng);
  CHECK(res.action_index == 0);
  // Creation + one forced try of each action; everything else exploits a0.
  CHECK(tree.root()->actions[0].n == 48);
  CHECK(tree.root()->actions[1].n == 1);
  CHECK(tree.root()->actions[0].q == doctest::Approx(1.0));
  CHECK(tree.root()->actions[1].q == doctest::Approx(2.0));
}

TEST_CASE("advance retains the matching subtree and drops the rest") {
  ScriptDomain d;
  d.fixed_menu = {make_action(0, 1.0, 5.0)};
  d.child_spread = 0.0;  // children land exactly at b + 10
  BeliefTree<ScriptDomain> tree(&d, script_config(10, 2));
  Rng rng(12);
  auto res = tree.search(0.0, rng);
  REQUIRE_FALSE(res.fallback);
  long before = tree.node_count();
  REQUIRE(before >= 2);

  tree.advance(res.action_index, 10.0);  // matches the depth-1 child exactly
  REQUIRE(tree.root() != nullptr);
  CHECK(tree.root()->belief == 10.0);
  CHECK(tree.node_count() < before);

  // A non-matching evolved belief clears the tree.
  tree.advance(0, 1e9);
  CHECK(tree.root() == nullptr);
}

TEST_CASE("tree invariants hold through a randomized fuzz run") {
  Rng mk(13);
  DiscreteBeliefMdp mdp;
  mdp.n_states = 6;
  mdp.goal = {false, false, false, false, true, false};
  mdp.fail = {false, false, false, false, false, true};
  mdp.actions.resize(6);
  for (int s = 0; s < 4; ++s) {
    for (int a = 0; a < 2; ++a) {
      double p_fwd = 0.6 + 0.3 * mk.uniform01();
      DiscreteAction act;
      act.cost = mk.uniform(0.5, 2.0);
      act.successors = {{std::min(s + 1 + a, 4), p_fwd}, {5, 0.1}, {s, 0.9 - p_fwd}};
      mdp.actions[s].push_back(act);
    }
  }
  mdp.start = 0;
  mdp.validate();

  DiscreteDomain d = make_discrete_domain(mdp, 1e4);
  TreeConfig tc;
  tc.n_p = 300;
  tc.k_sr = 6;
  tc.eta_q = 2.0;
  tc.delta_match = 0.5;
  BeliefTree<DiscreteDomain> tree(&d, tc);
  Rng rng(14);
  for (int round = 0; round < 10; ++round) {
    auto res = tree.search(0, rng);
    CHECK(tree.invariants_hold());
    REQUIRE_FALSE(res.fallback);
    tree.advance(res.action_index, mdp.actions[0][res.action.action_id].successors[0].first);
  }
}
