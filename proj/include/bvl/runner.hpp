#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bvl/config.hpp"
#include "bvl/episode.hpp"
#include "bvl/firm.hpp"

namespace bvl {

struct MetricsRow {
  std::string planner;
  std::string env;
  std::uint64_t seed = 0;
  std::string outcome;
  int steps = 0;
  double total_cost = 0.0;
  double sum_trace = 0.0;
  double wall_time_s = 0.0;  // kept out of metrics.csv so reruns are byte-identical
};

// 17-significant-digit decimal, enough to round-trip a double exactly.
std::string format_double(double v);

std::string metrics_to_csv(const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> metrics_from_csv(const std::string& text);
std::string timings_to_csv(const std::vector<MetricsRow>& rows);

MetricsRow metrics_from_episode(const EpisodeLog& log, const std::string& env_name);

struct BatchResult {
  std::vector<MetricsRow> rows;   // ordered by (planner order, seed)
  std::vector<EpisodeLog> logs;
};

// Runs cfg.n_runs episodes per selected planner with seeds
// base_seed..base_seed+n_runs-1. Planners on the same seed face the same
// noise stream, so comparisons are paired. Episodes run in parallel up to
// cfg.jobs; per-episode failures are recorded as outcome "error".
BatchResult run_batch(const ExperimentConfig& cfg, const Environment& env,
                      const FirmGraph* graph);

// Builds, evaluates and value-iterates the graph for cfg.
FirmGraph build_graph_for_config(const ExperimentConfig& cfg, const Environment& env);

struct ScoreRow {
  std::string planner;
  int n_runs = 0;
  int n_success = 0;
  double optimality = 0.0;  // min mean cost over planners / own mean cost
  double safety = 0.0;      // 1 - failure probability (collisions, caps, errors)
  bool flagged = false;     // no successful run
};

std::vector<ScoreRow> compute_scores(const std::vector<MetricsRow>& rows);
std::string scores_to_csv(const std::vector<ScoreRow>& rows);

struct SweepCell {
  std::string axis;
  double axis_value = 0.0;
  std::vector<MetricsRow> rows;
};

std::string sweep_to_csv(const std::vector<SweepCell>& cells);

}  // namespace bvl
