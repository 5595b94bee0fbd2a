#include "bvl/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "bvl/parallel.hpp"
#include "json.hpp"

namespace bvl {

void DiscreteBeliefMdp::validate() const {
  if (n_states <= 0 || static_cast<int>(actions.size()) != n_states ||
      static_cast<int>(goal.size()) != n_states || static_cast<int>(fail.size()) != n_states) {
    throw std::invalid_argument("mdp: inconsistent sizes");
  }
  for (int s = 0; s < n_states; ++s) {
    if (goal[s] && fail[s]) throw std::invalid_argument("mdp: state both goal and fail");
    if (is_terminal(s)) {
      if (!actions[s].empty()) throw std::invalid_argument("mdp: terminal state has actions");
      continue;
    }
    if (actions[s].empty()) throw std::invalid_argument("mdp: non-terminal state has no actions");
    for (const DiscreteAction& a : actions[s]) {
      double total = 0.0;
      for (const auto& [t, p] : a.successors) {
        if (t < 0 || t >= n_states || p < 0.0) throw std::invalid_argument("mdp: bad successor");
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-12) {
        throw std::invalid_argument("mdp: kernel row sums to " + std::to_string(total));
      }
    }
  }
}

double DiscreteBeliefMdp::policy_count() const {
  double count = 1.0;
  for (int s = 0; s < n_states; ++s) {
    if (!is_terminal(s)) count *= static_cast<double>(actions[s].size());
  }
  return count;
}

std::string mdp_to_json(const DiscreteBeliefMdp& mdp) {
  nlohmann::json j;
  j["n_states"] = mdp.n_states;
  j["start"] = mdp.start;
  auto goals = nlohmann::json::array();
  auto fails = nlohmann::json::array();
  for (int s = 0; s < mdp.n_states; ++s) {
    if (mdp.goal[s]) goals.push_back(s);
    if (mdp.fail[s]) fails.push_back(s);
  }
  j["goal_states"] = goals;
  j["fail_states"] = fails;
  auto actions = nlohmann::json::array();
  for (int s = 0; s < mdp.n_states; ++s) {
    auto list = nlohmann::json::array();
    for (const DiscreteAction& a : mdp.actions[s]) {
      nlohmann::json ja;
      ja["cost"] = a.cost;
      auto succ = nlohmann::json::array();
      for (const auto& [t, p] : a.successors) succ.push_back({t, p});
      ja["successors"] = succ;
      list.push_back(ja);
    }
    actions.push_back(list);
  }
  j["actions"] = actions;
  return j.dump(2);
}

DiscreteBeliefMdp mdp_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  DiscreteBeliefMdp mdp;
  mdp.n_states = j.at("n_states");
  mdp.start = j.at("start");
  mdp.goal.assign(mdp.n_states, false);
  mdp.fail.assign(mdp.n_states, false);
  for (int s : j.at("goal_states")) mdp.goal[s] = true;
  for (int s : j.at("fail_states")) mdp.fail[s] = true;
  mdp.actions.resize(mdp.n_states);
  int s = 0;
  for (const auto& list : j.at("actions")) {
    for (const auto& ja : list) {
      DiscreteAction a;
      a.cost = ja.at("cost");
      for (const auto& sp : ja.at("successors")) {
        a.successors.emplace_back(sp.at(0).get<int>(), sp.at(1).get<double>());
      }
      mdp.actions[s].push_back(std::move(a));
    }
    ++s;
  }
  mdp.validate();
  return mdp;
}

namespace {

// States with a nonzero probability of never reaching a terminal under the
// policy: those from which some policy-reachable state cannot reach any
// terminal.
std::vector<bool> improper_states(const DiscreteBeliefMdp& mdp, const DiscretePolicy& policy) {
  const int n = mdp.n_states;
  std::vector<std::vector<int>> rev(n);
  for (int s = 0; s < n; ++s) {
    if (mdp.is_terminal(s)) continue;
    for (const auto& [t, p] : mdp.actions[s][policy[s]].successors) {
      if (p > 0.0) rev[t].push_back(s);
    }
  }
  // Backward reachability from terminals.
  std::vector<bool> can_terminate(n, false);
  std::deque<int> queue;
  for (int s = 0; s < n; ++s) {
    if (mdp.is_terminal(s)) {
      can_terminate[s] = true;
      queue.push_back(s);
    }
  }
  while (!queue.empty()) {
    int t = queue.front();
    queue.pop_front();
    for (int s : rev[t]) {
      if (!can_terminate[s]) {
        can_terminate[s] = true;
        queue.push_back(s);
      }
    }
  }
  // Backward reachability from the dead set marks everything that can wander
  // into it.
  std::vector<bool> improper(n, false);
  for (int s = 0; s < n; ++s) {
    if (!can_terminate[s]) {
      improper[s] = true;
      queue.push_back(s);
    }
  }
  while (!queue.empty()) {
    int t = queue.front();
    queue.pop_front();
    for (int s : rev[t]) {
      if (!improper[s]) {
        improper[s] = true;
        queue.push_back(s);
      }
    }
  }
  return improper;
}

}  // namespace

Eigen::VectorXd exact_policy_cost(const DiscreteBeliefMdp& mdp, const DiscretePolicy& policy,
                                  double j_fail) {
  const int n = mdp.n_states;
  Eigen::VectorXd J = Eigen::VectorXd::Zero(n);
  std::vector<bool> improper = improper_states(mdp, policy);

  std::vector<int> solve_ids;
  std::vector<int> idx(n, -1);
  for (int s = 0; s < n; ++s) {
    if (mdp.goal[s]) {
      J(s) = 0.0;
    } else if (mdp.fail[s] || improper[s]) {
      J(s) = j_fail;
    } else {
      idx[s] = static_cast<int>(solve_ids.size());
      solve_ids.push_back(s);
    }
  }

  const int m = static_cast<int>(solve_ids.size());
  if (m > 0) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(m, m);
    Eigen::VectorXd rhs(m);
    for (int i = 0; i < m; ++i) {
      int s = solve_ids[i];
      const DiscreteAction& a = mdp.actions[s][policy[s]];
      rhs(i) = a.cost;
      for (const auto& [t, p] : a.successors) {
        if (idx[t] >= 0) {
          A(i, idx[t]) -= p;
        } else {
          rhs(i) += p * J(t);
        }
      }
    }
    Eigen::VectorXd x = A.partialPivLu().solve(rhs);
    for (int i = 0; i < m; ++i) J(solve_ids[i]) = x(i);
  }
  return J;
}

Eigen::VectorXd exact_policy_risk(const DiscreteBeliefMdp& mdp, const DiscretePolicy& policy) {
  const int n = mdp.n_states;
  Eigen::VectorXd rho = Eigen::VectorXd::Zero(n);
  for (int s = 0; s < n; ++s) {
    if (mdp.fail[s]) rho(s) = 1.0;
  }
  // Iteration from zero converges to the minimal fixed point, i.e. the
  // probability of ever hitting the failure set.
  Eigen::VectorXd next = rho;
  for (int iter = 0; iter < 200000; ++iter) {
    double delta = 0.0;
    for (int s = 0; s < n; ++s) {
      if (mdp.is_terminal(s)) continue;
      double r = 0.0;
      for (const auto& [t, p] : mdp.actions[s][policy[s]].successors) r += p * rho(t);
      delta = std::max(delta, std::abs(r - rho(s)));
      next(s) = r;
    }
    rho.swap(next);
    if (delta < 1e-14) break;
  }
  return rho;
}

namespace {

std::vector<int> nonterminal_states(const DiscreteBeliefMdp& mdp) {
  std::vector<int> out;
  for (int s = 0; s < mdp.n_states; ++s) {
    if (!mdp.is_terminal(s)) out.push_back(s);
  }
  return out;
}

DiscretePolicy policy_from_index(const DiscreteBeliefMdp& mdp, const std::vector<int>& nts,
                                 long index) {
  DiscretePolicy policy(mdp.n_states, -1);
  long rem = index;
  for (int s : nts) {
    long k = static_cast<long>(mdp.actions[s].size());
    policy[s] = static_cast<int>(rem % k);
    rem /= k;
  }
  return policy;
}

}  // namespace

EnumerationResult enumerate_optimal(const DiscreteBeliefMdp& mdp, double j_fail, int jobs) {
  mdp.validate();
  double count_d = mdp.policy_count();
  if (count_d > 1e6) {
    throw OracleRefusal("enumerate_optimal: " + std::to_string(count_d) +
                        " policies exceed the 10^6 budget");
  }
  const long count = static_cast<long>(count_d);
  std::vector<int> nts = nonterminal_states(mdp);

  std::vector<double> cost(count);
  std::vector<double> risk(count);
  parallel_for(static_cast<int>(count), jobs, [&](int i) {
    DiscretePolicy policy = policy_from_index(mdp, nts, i);
    cost[i] = exact_policy_cost(mdp, policy, j_fail)(mdp.start);
    risk[i] = exact_policy_risk(mdp, policy)(mdp.start);
  });

  double best_cost = *std::min_element(cost.begin(), cost.end());
  double best_risk = *std::min_element(risk.begin(), risk.end());
  auto tie = [](double v, double best) {
    return std::abs(v - best) <= 1e-9 * std::max(1.0, std::abs(best));
  };

  EnumerationResult res;
  res.best_cost = best_cost;
  res.best_risk = best_risk;
  for (long i = 0; i < count; ++i) {
    if (tie(cost[i], best_cost)) res.cost_argmin.push_back(policy_from_index(mdp, nts, i));
    if (tie(risk[i], best_risk)) res.risk_argmin.push_back(policy_from_index(mdp, nts, i));
  }
  return res;
}

ExpectimaxResult expectimax_action(const DiscreteBeliefMdp& mdp, int s0, int depth,
                                   const Eigen::VectorXd& leaf_values, double j_fail) {
  mdp.validate();
  int branching = 1;
  for (int s = 0; s < mdp.n_states; ++s) {
    for (const DiscreteAction& a : mdp.actions[s]) {
      branching = std::max(branching, static_cast<int>(mdp.actions[s].size()) *
                                          static_cast<int>(a.successors.size()));
    }
  }
  if (std::pow(static_cast<double>(branching), depth) > 1e7) {
    throw OracleRefusal("expectimax_action: branching^depth exceeds the 10^7 budget");
  }

  const int n = mdp.n_states;
  // V[d] = value with d levels of lookahead remaining.
  Eigen::MatrixXd V(depth + 1, n);
  for (int s = 0; s < n; ++s) {
    V(0, s) = mdp.goal[s] ? 0.0 : mdp.fail[s] ? j_fail : leaf_values(s);
  }
  for (int d = 1; d <= depth; ++d) {
    for (int s = 0; s < n; ++s) {
      if (mdp.goal[s]) {
        V(d, s) = 0.0;
      } else if (mdp.fail[s]) {
        V(d, s) = j_fail;
      } else {
        double best = std::numeric_limits<double>::infinity();
        for (const DiscreteAction& a : mdp.actions[s]) {
          double q = a.cost;
          for (const auto& [t, p] : a.successors) q += p * V(d - 1, t);
          best = std::min(best, q);
        }
        V(d, s) = best;
      }
    }
  }

  ExpectimaxResult res;
  if (mdp.is_terminal(s0)) {
    res.value = V(depth, s0);
    return res;
  }
  double best = std::numeric_limits<double>::infinity();
  for (int ai = 0; ai < static_cast<int>(mdp.actions[s0].size()); ++ai) {
    const DiscreteAction& a = mdp.actions[s0][ai];
    double q = a.cost;
    for (const auto& [t, p] : a.successors) q += p * V(depth - 1, t);
    if (q < best) {
      best = q;
      res.action = ai;
    }
  }
  res.value = best;
  return res;
}

DiscretePolicy first_action_policy(const DiscreteBeliefMdp& mdp) {
  DiscretePolicy policy(mdp.n_states, -1);
  for (int s = 0; s < mdp.n_states; ++s) {
    if (!mdp.is_terminal(s)) policy[s] = 0;
  }
  return policy;
}

FirmGraph graph_from_mdp(const DiscreteBeliefMdp& mdp, double j_fail) {
  mdp.validate();
  FirmGraph g;
  g.j_fail = j_fail;

  // Non-terminal states become nodes; all goal states merge into node 0.
  std::vector<int> node_of(mdp.n_states, -1);
  FirmNode goal_node;
  goal_node.id = 0;
  g.nodes.push_back(goal_node);
  g.goal_node = 0;
  for (int s = 0; s < mdp.n_states; ++s) {
    if (mdp.goal[s]) {
      node_of[s] = 0;
    } else if (!mdp.fail[s]) {
      FirmNode n;
      n.id = static_cast<int>(g.nodes.size());
      node_of[s] = n.id;
      g.nodes.push_back(n);
    }
  }
  g.out_edges.assign(g.nodes.size(), {});
  for (int s = 0; s < mdp.n_states; ++s) {
    if (mdp.is_terminal(s)) continue;
    for (const DiscreteAction& a : mdp.actions[s]) {
      FirmEdge e;
      e.id = static_cast<int>(g.edges.size());
      e.from = node_of[s];
      e.to = node_of[s];  // placeholder; outcomes carry the real distribution
      e.cost = a.cost;
      e.p_fail = 0.0;
      for (const auto& [t, p] : a.successors) {
        if (mdp.fail[t]) {
          e.p_fail += p;
        } else {
          e.outcomes.emplace_back(node_of[t], p);
        }
      }
      e.mc_samples = 0;
      g.out_edges[e.from].push_back(e.id);
      g.edges.push_back(std::move(e));
    }
  }
  return g;
}

std::vector<double> graph_j_on_states(const DiscreteBeliefMdp& mdp, const FirmGraph& graph) {
  std::vector<double> J(mdp.n_states, graph.j_fail);
  int node = 1;
  for (int s = 0; s < mdp.n_states; ++s) {
    if (mdp.goal[s]) {
      J[s] = 0.0;
    } else if (!mdp.fail[s]) {
      J[s] = graph.J[node++];
    }
  }
  return J;
}

void DiscreteDomain::menu(const Belief& b, std::vector<MenuAction>& out) const {
  out.clear();
  if (mdp->is_terminal(b)) return;
  const auto& acts = mdp->actions[b];
  out.reserve(acts.size());
  for (int ai = 0; ai < static_cast<int>(acts.size()); ++ai) {
    MenuAction a;
    a.action_id = ai;
    a.target_id = ai;
    a.heuristic_cost = acts[ai].cost;
    double cont = 0.0;
    for (const auto& [t, p] : acts[ai].successors) {
      cont += p * (mdp->goal[t] ? 0.0 : mdp->fail[t] ? fail_value : value_hint[t]);
    }
    a.terminal_value = cont;
    out.push_back(a);
  }
}

DiscreteDomain::StepResult DiscreteDomain::step(const TrueState& x, const Belief& b,
                                                const MenuAction& a, Rng& rng) const {
  (void)x;
  const DiscreteAction& act = mdp->actions[b][a.action_id];
  double u = rng.uniform01();
  double acc = 0.0;
  int succ = act.successors.back().first;
  for (const auto& [t, p] : act.successors) {
    acc += p;
    if (u < acc) {
      succ = t;
      break;
    }
  }
  StepResult out;
  out.state = succ;
  out.belief = succ;
  out.cost = act.cost;
  out.collided = mdp->fail[succ];
  return out;
}

double DiscreteDomain::heuristic_value(const Belief& b) const {
  if (mdp->goal[b]) return 0.0;
  if (mdp->fail[b]) return fail_value;
  return value_hint[b];
}

DiscreteDomain make_discrete_domain(const DiscreteBeliefMdp& mdp, double j_fail) {
  DiscreteDomain d;
  d.mdp = &mdp;
  d.fail_value = j_fail;
  Eigen::VectorXd cont = exact_policy_cost(mdp, first_action_policy(mdp), j_fail);
  d.value_hint.assign(cont.data(), cont.data() + cont.size());
  return d;
}

}  // namespace bvl
