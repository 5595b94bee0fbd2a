#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bvl/beliefs.hpp"
#include "bvl/models.hpp"
#include "bvl/world.hpp"

namespace bvl {

enum class Outcome { Goal, Collision, Cap, Error };

std::string to_string(Outcome o);
Outcome outcome_from_string(const std::string& s);

struct StepRecord {
  int k = 0;
  State state;          // executed true state after the step
  Control control;
  int obs_count = 0;
  std::uint64_t obs_hash = 0;
  State belief_mean;
  double cov_trace = 0.0;
  double step_cost = 0.0;
  double cum_cost = 0.0;
};

// Seeded record of one executed episode.
struct EpisodeLog {
  std::string planner;
  std::string env_name;
  std::uint64_t seed = 0;
  std::vector<StepRecord> steps;
  Outcome outcome = Outcome::Error;
  int n_steps = 0;
  double total_cost = 0.0;
  double sum_trace = 0.0;  // sum of tr(P_k) over executed steps
  bool fallback_used = false;
  double wall_time_s = 0.0;
};

// JSON-lines serialization: a header line, one line per step, and a terminal
// result line.
std::string episode_to_jsonl(const EpisodeLog& log);
EpisodeLog episode_from_jsonl(const std::string& text);

std::uint64_t observation_hash(const Observation& z);

// The simulated plant shared by every planner: executes a control on the true
// state, draws the real observation, and runs the filter.
struct SimWorld {
  const Environment* env = nullptr;
  MotionModel mm;
  ObservationModel om;
  CostWeights cw;
  BeliefMetric metric;

  struct ExecStep {
    State x;
    Observation z;
    GaussianBelief b;
    double cost = 0.0;
    bool collided = false;
  };

  ExecStep execute(const State& x, const GaussianBelief& b, const Control& u, Rng& rng) const;
};

}  // namespace bvl
