#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "bvl/baselines.hpp"
#include "bvl/bvl.hpp"
#include "bvl/firm.hpp"
#include "bvl/world.hpp"

namespace bvl {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One experiment: environment family, model parameters, planner budgets, and
// the run matrix. Everything has a default so config files only state what
// they change. The cost Delta-t always mirrors the motion model's dt.
struct ExperimentConfig {
  RnpSpec rnp;
  RnpGeometry geometry;
  MotionModel motion;
  ObservationModel observation;
  CostWeights cost;
  BeliefMetric metric;
  LqgWeights lqg;
  double initial_cov_xy = 0.01;
  double initial_cov_theta = 0.005;

  FirmBuildParams firm;
  std::uint64_t firm_seed = 1;

  PlannerConfig planner;
  UrmConfig urm;
  OgrConfig ogr;
  FirmExecConfig firm_exec;

  int n_runs = 20;
  std::uint64_t base_seed = 100;
  int step_cap = 20000;
  std::vector<std::string> planners{"bvl"};
  int jobs = 0;
  std::string out_dir = "out";

  GaussianBelief initial_belief(const Environment& env) const;
};

// Display name like "InfoTrap(10,3)".
std::string rnp_name(const RnpSpec& spec);

ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg);

bool is_known_planner(const std::string& name);

}  // namespace bvl
