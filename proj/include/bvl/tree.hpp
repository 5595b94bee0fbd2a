#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "bvl/rng.hpp"

namespace bvl {

// One entry of a belief node's controller menu: an action toward a target
// with the bridge initialization terms C^j and J~(B^j). penalty is an
// additive surcharge applied to the initialization and to every backed-up
// return of the action (zero except for the uniform-roadmap stay action).
struct MenuAction {
  int action_id = -1;
  int target_id = -1;
  double heuristic_cost = 0.0;  // C^j
  double terminal_value = 0.0;  // J~(B^j)
  double penalty = 0.0;

  double init_q() const { return heuristic_cost + terminal_value + penalty; }
};

// What a rollout does once it passes the short-range horizon: commit to the
// last controller until its target node ball is reached (graph-bridged
// planners), or price the current belief with a heuristic immediately.
enum class BridgeMode { ToTargetNode, ImmediateHeuristic };

// J-value bootstrapping backs up min_u Q(b', u); the Monte Carlo rule backs
// up the raw sampled return.
enum class BackupRule { JValue, MonteCarloReturn };

struct TreeConfig {
  int n_p = 500;           // simulations per decision
  int k_sr = 30;           // short-range horizon (tree depth)
  double eta_q = 1.0;      // tree-policy exploration constant
  double eta_w = 0.05;     // rollout exploration constant
  double delta_match = 0.1;  // belief-matching tolerance
  int bridge_cap = 600;    // max bridge steps before a rollout counts as failed
  BackupRule backup = BackupRule::JValue;
};

// Monte Carlo belief-tree search over a planning domain.
//
// Domain requirements (duck typed):
//   using TrueState = ...; using Belief = ...;
//   double j_fail() const;
//   BridgeMode bridge_mode() const;
//   bool is_goal(const Belief&) const;
//   double belief_distance(const Belief&, const Belief&) const;
//   TrueState sample_state(const Belief&, Rng&) const;
//   void menu(const Belief&, std::vector<MenuAction>&) const;
//   StepResult step(const TrueState&, const Belief&, const MenuAction&, Rng&) const,
//     where StepResult has members: TrueState state; Belief belief;
//     double cost; bool collided;
//   bool in_target_ball(const Belief&, int target_id) const;  // ToTargetNode
//   double heuristic_value(const Belief&) const;              // ImmediateHeuristic
template <class Domain>
class BeliefTree {
 public:
  using Belief = typename Domain::Belief;
  using TrueState = typename Domain::TrueState;

  struct Node;

  struct ActionStat {
    MenuAction action;
    double q = 0.0;
    long n = 0;
    std::vector<std::unique_ptr<Node>> children;  // matched by belief proximity
  };

  struct Node {
    Belief belief;
    long n = 0;
    double j = 0.0;
    std::vector<ActionStat> actions;
  };

  struct SearchResult {
    bool fallback = false;  // no viable controller at the root
    int action_index = -1;
    MenuAction action;
  };

  BeliefTree(const Domain* domain, const TreeConfig& cfg) : domain_(domain), cfg_(cfg) {}

  // One decision: N_p simulations from states sampled out of b, then the
  // greedy (min-Q, no exploration bonus) root action.
  SearchResult search(const Belief& b, Rng& rng) {
    if (root_ && domain_->belief_distance(root_->belief, b) > cfg_.delta_match) {
      root_.reset();
    }
    for (int i = 0; i < cfg_.n_p; ++i) {
      TrueState x = domain_->sample_state(b, rng);
      simulate(&root_, x, b, 0, nullptr, rng);
    }

    SearchResult res;
    if (!root_ || root_->actions.empty()) {
      res.fallback = true;
      return res;
    }
    int best = -1;
    for (int i = 0; i < static_cast<int>(root_->actions.size()); ++i) {
      if (best < 0 || root_->actions[i].q < root_->actions[best].q) best = i;
    }
    res.action_index = best;
    res.action = root_->actions[best].action;
    return res;
  }

  // Retains the subtree behind the executed action that matches the evolved
  // belief as the next root; everything else is discarded.
  void advance(int action_index, const Belief& b) {
    if (!root_ || action_index < 0 ||
        action_index >= static_cast<int>(root_->actions.size())) {
      root_.reset();
      return;
    }
    auto& children = root_->actions[action_index].children;
    int best = -1;
    double best_d = cfg_.delta_match;
    for (int i = 0; i < static_cast<int>(children.size()); ++i) {
      double d = domain_->belief_distance(children[i]->belief, b);
      if (d <= best_d) {
        best_d = d;
        best = i;
      }
    }
    if (best < 0) {
      root_.reset();
    } else {
      std::unique_ptr<Node> next = std::move(children[best]);
      root_ = std::move(next);
    }
  }

  void reset() { root_.reset(); }

  const Node* root() const { return root_.get(); }

  long node_count() const { return count_nodes(root_.get()); }

  // J(b) = min_u Q(b, u) and N(b) = sum_u N(b, u) at every node.
  bool invariants_hold(double tol = 1e-9) const { return check_node(root_.get(), tol); }

 private:
  double simulate(std::unique_ptr<Node>* slot, const TrueState& x, const Belief& b, int depth,
                  const MenuAction* mu_prev, Rng& rng) {
    if (domain_->is_goal(b)) return 0.0;
    if (depth > cfg_.k_sr) return rollout(x, b, depth, mu_prev, rng);

    if (!*slot) {
      *slot = make_node(b);
      return rollout(x, b, depth, mu_prev, rng);
    }

    Node* nd = slot->get();
    if (nd->actions.empty()) return domain_->j_fail();

    int ai = select_uct(*nd);
    ActionStat& as = nd->actions[ai];

    auto sr = domain_->step(x, b, as.action, rng);
    double r;
    if (sr.collided) {
      r = sr.cost + domain_->j_fail();
    } else {
      bool added_new = false;
      std::unique_ptr<Node>* child = match_or_new_slot(as, sr.belief, &added_new);
      r = sr.cost + simulate(child, sr.state, sr.belief, depth + 1, &as.action, rng);
      // The recursion leaves the slot empty when it went straight to rollout
      // (goal or past the horizon); drop it so matching never sees a null.
      if (added_new && as.children.back() == nullptr) as.children.pop_back();
    }
    r += as.action.penalty;

    as.n += 1;
    nd->n += 1;
    as.q += (r - as.q) / static_cast<double>(as.n);
    nd->j = min_q(*nd);
    return cfg_.backup == BackupRule::JValue ? nd->j : r;
  }

  double rollout(TrueState x, Belief b, int depth, const MenuAction* mu_prev, Rng& rng) {
    double accrued = 0.0;
    MenuAction committed;
    bool have_committed = false;
    if (mu_prev != nullptr) {
      committed = *mu_prev;
      have_committed = true;
    }
    int bridge_steps = 0;
    std::vector<MenuAction> menu;

    while (true) {
      if (domain_->is_goal(b)) return accrued;

      const MenuAction* act = nullptr;
      if (depth > cfg_.k_sr) {
        if (domain_->bridge_mode() == BridgeMode::ImmediateHeuristic) {
          return accrued + domain_->heuristic_value(b);
        }
        if (!have_committed) return accrued + domain_->j_fail();
        if (domain_->in_target_ball(b, committed.target_id)) {
          return accrued + committed.terminal_value;
        }
        if (++bridge_steps > cfg_.bridge_cap) return accrued + domain_->j_fail();
        act = &committed;
      } else {
        domain_->menu(b, menu);
        if (menu.empty()) return accrued + domain_->j_fail();
        committed = menu[sample_weighted(menu, rng)];
        have_committed = true;
        act = &committed;
      }

      auto sr = domain_->step(x, b, *act, rng);
      accrued += sr.cost;
      if (sr.collided) return accrued + domain_->j_fail();
      x = sr.state;
      b = sr.belief;
      depth += 1;
    }
  }

  std::unique_ptr<Node> make_node(const Belief& b) const {
    auto nd = std::make_unique<Node>();
    nd->belief = b;
    std::vector<MenuAction> menu;
    domain_->menu(b, menu);
    nd->actions.reserve(menu.size());
    for (const MenuAction& a : menu) {
      ActionStat as;
      as.action = a;
      as.q = a.init_q();
      nd->actions.push_back(std::move(as));
    }
    nd->j = nd->actions.empty() ? domain_->j_fail() : min_q(*nd);
    return nd;
  }

  int select_uct(const Node& nd) const {
    for (int i = 0; i < static_cast<int>(nd.actions.size()); ++i) {
      if (nd.actions[i].n == 0) return i;  // untried first, in id order
    }
    double log_n = std::log(static_cast<double>(nd.n));
    int best = -1;
    double best_v = std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(nd.actions.size()); ++i) {
      const ActionStat& as = nd.actions[i];
      double v = as.q - cfg_.eta_q * std::sqrt(log_n / static_cast<double>(as.n));
      if (v < best_v) {
        best_v = v;
        best = i;
      }
    }
    return best;
  }

  std::unique_ptr<Node>* match_or_new_slot(ActionStat& as, const Belief& b,
                                           bool* added_new) const {
    int best = -1;
    double best_d = cfg_.delta_match;
    for (int i = 0; i < static_cast<int>(as.children.size()); ++i) {
      double d = domain_->belief_distance(as.children[i]->belief, b);
      if (d <= best_d) {
        best_d = d;
        best = i;
      }
    }
    if (best >= 0) {
      *added_new = false;
      return &as.children[best];
    }
    *added_new = true;
    as.children.emplace_back();
    return &as.children.back();
  }

  int sample_weighted(const std::vector<MenuAction>& menu, Rng& rng) const {
    double total = 0.0;
    double w[64];
    int n = std::min<int>(64, static_cast<int>(menu.size()));
    for (int i = 0; i < n; ++i) {
      double denom = menu[i].heuristic_cost + menu[i].terminal_value + menu[i].penalty;
      double wi = (denom > 1e-12 ? 1.0 / denom : 1e18) + cfg_.eta_w;
      w[i] = wi;
      total += wi;
    }
    if (total <= 0.0) return rng.uniform_int(n);
    double u = rng.uniform01() * total;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      acc += w[i];
      if (u < acc) return i;
    }
    return n - 1;
  }

  static double min_q(const Node& nd) {
    double m = std::numeric_limits<double>::infinity();
    for (const ActionStat& as : nd.actions) m = std::min(m, as.q);
    return m;
  }

  static long count_nodes(const Node* nd) {
    if (nd == nullptr) return 0;
    long c = 1;
    for (const ActionStat& as : nd->actions) {
      for (const auto& ch : as.children) c += count_nodes(ch.get());
    }
    return c;
  }

  bool check_node(const Node* nd, double tol) const {
    if (nd == nullptr) return true;
    long visits = 0;
    for (const ActionStat& as : nd->actions) visits += as.n;
    if (visits != nd->n) return false;
    if (!nd->actions.empty()) {
      double m = min_q(*nd);
      double scale = std::max(1.0, std::abs(m));
      if (std::abs(nd->j - m) > tol * scale) return false;
    }
    for (const ActionStat& as : nd->actions) {
      for (const auto& ch : as.children) {
        if (!check_node(ch.get(), tol)) return false;
      }
    }
    return true;
  }

  const Domain* domain_;
  TreeConfig cfg_;
  std::unique_ptr<Node> root_;
};

}  // namespace bvl
