#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bvl/beliefs.hpp"
#include "bvl/controllers.hpp"
#include "bvl/rng.hpp"
#include "bvl/world.hpp"

namespace bvl {

// Belief node: the closed ball of beliefs within epsilon of the center
// (v, P_c) under the composite belief metric.
struct FirmNode {
  int id = 0;
  GaussianBelief center;
  double epsilon = 0.25;
};

inline bool is_in_node(const GaussianBelief& b, const FirmNode& node, const BeliefMetric& m) {
  return belief_distance(b, node.center, m) <= node.epsilon;
}

// Edge with its Monte Carlo statistics. Outcomes other than the designated
// target are bucketed as failure by the estimator, but the value-iteration
// backup accepts a general successor distribution.
struct FirmEdge {
  int id = 0;
  int from = 0;
  int to = 0;
  EdgeController controller;
  double cost = 0.0;                              // mean accrued cost, C~
  std::vector<std::pair<int, double>> outcomes;   // successor node -> probability
  double p_fail = 1.0;
  int mc_samples = 0;

  double p_success() const {
    for (const auto& [node, p] : outcomes) {
      if (node == to) return p;
    }
    return 0.0;
  }
};

struct FirmGraph {
  std::vector<FirmNode> nodes;
  std::vector<FirmEdge> edges;
  std::vector<std::vector<int>> out_edges;  // per-node outgoing edge ids
  int goal_node = 0;
  double j_fail = 1e6;
  BeliefMetric metric;
  Eigen::Matrix3d gain = Eigen::Matrix3d::Zero();  // shared LQG gain
  std::vector<double> J;
  std::vector<int> policy;  // edge id per node, -1 where no path improves on J_fail
  std::uint64_t env_hash = 0;

  const FirmNode& goal() const { return nodes[goal_node]; }
  bool valued() const { return J.size() == nodes.size(); }
};

struct FirmBuildParams {
  int n_nodes = 120;
  double epsilon = 0.25;
  double connect_radius = 4.0;
  int n_mc = 25;
  int edge_step_cap = 600;
  int stabilization_cap = 400;
  double j_fail = 1e6;
  int jobs = 1;  // <=1 serial, otherwise OpenMP workers for edge evaluation
};

// Sampled-node graph with controllers and stationary covariances; edges are
// unevaluated (cost/probabilities at their defaults). The goal node is
// inserted first. Deterministic in (env, params, rng seed).
FirmGraph build_graph(const Environment& env, const FirmBuildParams& params, Rng& rng,
                      const MotionModel& mm, const ObservationModel& om, const LqgWeights& lqg,
                      const BeliefMetric& metric);

struct EdgeEvalResult {
  double cost = 0.0;
  double p_success = 0.0;
  int n_success = 0;
};

// Monte Carlo evaluation of one edge: n_mc closed-loop runs from the source
// node's center belief; success means entering the target node ball. Reported
// cost is the mean over successful runs (over all runs when none succeed).
EdgeEvalResult evaluate_edge(const FirmGraph& graph, const FirmEdge& edge, int n_mc, Rng rng,
                             const Environment& env, const MotionModel& mm,
                             const ObservationModel& om, const CostWeights& cw,
                             int edge_step_cap, int stabilization_cap);

// Evaluates every edge and stores the results. Per-edge derived rng streams
// (label = edge id) make the result independent of the number of workers.
void evaluate_all_edges(FirmGraph& graph, int n_mc, const Rng& base_rng, const Environment& env,
                        const MotionModel& mm, const ObservationModel& om, const CostWeights& cw,
                        int edge_step_cap, int stabilization_cap, int jobs);

// Undiscounted Bellman backups with the goal pinned at zero and failure
// valued at j_fail; ties broken by lowest edge id.
void value_iteration(FirmGraph& graph, double j_fail);

// Max Bellman residual of the stored J (diagnostic).
double bellman_residual(const FirmGraph& graph);

// Probability of ever failing when following the stored policy from each
// node, via the success/failure recursion on the graph abstraction.
std::vector<double> policy_chain_risk(const FirmGraph& graph);

// k nodes nearest to b in the belief metric whose straight segment from
// b.mean is collision-free; fewer when not enough qualify.
std::vector<int> neighbors_of_belief(const FirmGraph& graph, const GaussianBelief& b, int k,
                                     const Environment& env);

// As above without the collision filter (used as an execution fallback).
int nearest_node(const FirmGraph& graph, const GaussianBelief& b);

struct GraphIoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string serialize_graph(const FirmGraph& graph);
FirmGraph deserialize_graph(const std::string& text);

void save_graph(const FirmGraph& graph, const std::string& path);
FirmGraph load_graph(const std::string& path);

}  // namespace bvl
