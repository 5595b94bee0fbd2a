#include "bvl/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace bvl {

GaussianBelief ExperimentConfig::initial_belief(const Environment& env) const {
  GaussianBelief b;
  b.mean = env.start;
  b.cov = Eigen::Vector3d(initial_cov_xy, initial_cov_xy, initial_cov_theta).asDiagonal();
  return b;
}

std::string rnp_name(const RnpSpec& spec) {
  std::ostringstream out;
  out << to_string(spec.family) << "(";
  if (spec.e == std::floor(spec.e)) {
    out << static_cast<long>(spec.e);
  } else {
    out << spec.e;
  }
  out << ",";
  if (spec.o == std::floor(spec.o)) {
    out << static_cast<long>(spec.o);
  } else {
    out << spec.o;
  }
  out << ")";
  return out.str();
}

bool is_known_planner(const std::string& name) {
  return name == "bvl" || name == "urm-pomcp" || name == "ogr" || name == "firm";
}

namespace {

template <class T>
void get_if(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }

  ExperimentConfig cfg;
  try {
    if (j.contains("env")) {
      const auto& je = j.at("env");
      if (je.contains("family")) cfg.rnp.family = rnp_family_from_string(je.at("family"));
      get_if(je, "e", cfg.rnp.e);
      get_if(je, "o", cfg.rnp.o);
      get_if(je, "seed", cfg.rnp.seed);
    }
    if (j.contains("geometry")) {
      const auto& jg = j.at("geometry");
      get_if(jg, "passage_width", cfg.geometry.passage_width);
      get_if(jg, "wall_thickness", cfg.geometry.wall_thickness);
      get_if(jg, "infotrap_landmarks", cfg.geometry.infotrap_landmarks);
      get_if(jg, "landmark_inset", cfg.geometry.landmark_inset);
      get_if(jg, "obswall_landmarks", cfg.geometry.obswall_landmarks);
      get_if(jg, "forest_obstacle_side", cfg.geometry.forest_obstacle_side);
      get_if(jg, "forest_jitter", cfg.geometry.forest_jitter);
      get_if(jg, "forest_landmarks", cfg.geometry.forest_landmarks);
      get_if(jg, "robot_radius", cfg.geometry.robot_radius);
    }
    if (j.contains("motion")) {
      const auto& jm = j.at("motion");
      get_if(jm, "dt", cfg.motion.dt);
      get_if(jm, "sigma_w", cfg.motion.sigma_w);
      get_if(jm, "sigma_w_bias", cfg.motion.sigma_w_bias);
      get_if(jm, "v_max", cfg.motion.v_max);
    }
    if (j.contains("observation")) {
      const auto& jo = j.at("observation");
      get_if(jo, "xi_r", cfg.observation.xi_r);
      get_if(jo, "xi_theta", cfg.observation.xi_theta);
      get_if(jo, "sigma_rb", cfg.observation.sigma_rb);
      get_if(jo, "sigma_tb", cfg.observation.sigma_tb);
      get_if(jo, "sensing_range", cfg.observation.sensing_range);
    }
    if (j.contains("cost")) {
      const auto& jc = j.at("cost");
      get_if(jc, "xi_p", cfg.cost.xi_p);
      get_if(jc, "xi_T", cfg.cost.xi_T);
    }
    cfg.cost.dt = cfg.motion.dt;
    if (j.contains("belief_metric")) {
      const auto& jm = j.at("belief_metric");
      get_if(jm, "wx", cfg.metric.wx);
      get_if(jm, "wy", cfg.metric.wy);
      get_if(jm, "w_theta", cfg.metric.w_theta);
      get_if(jm, "xi_sigma", cfg.metric.xi_sigma);
    }
    if (j.contains("lqg")) {
      const auto& jl = j.at("lqg");
      if (jl.contains("wx")) cfg.lqg.Wx = jl.at("wx").get<double>() * Eigen::Matrix3d::Identity();
      if (jl.contains("wu")) cfg.lqg.Wu = jl.at("wu").get<double>() * Eigen::Matrix3d::Identity();
    }
    get_if(j, "initial_cov_xy", cfg.initial_cov_xy);
    get_if(j, "initial_cov_theta", cfg.initial_cov_theta);
    if (j.contains("firm")) {
      const auto& jf = j.at("firm");
      get_if(jf, "n_nodes", cfg.firm.n_nodes);
      get_if(jf, "epsilon", cfg.firm.epsilon);
      get_if(jf, "connect_radius", cfg.firm.connect_radius);
      get_if(jf, "n_mc", cfg.firm.n_mc);
      get_if(jf, "edge_step_cap", cfg.firm.edge_step_cap);
      get_if(jf, "stabilization_cap", cfg.firm.stabilization_cap);
      get_if(jf, "j_fail", cfg.firm.j_fail);
      get_if(jf, "seed", cfg.firm_seed);
    }
    if (j.contains("planner")) {
      const auto& jp = j.at("planner");
      get_if(jp, "n_p", cfg.planner.n_p);
      get_if(jp, "k_sr", cfg.planner.k_sr);
      get_if(jp, "eta_q", cfg.planner.eta_q);
      get_if(jp, "eta_w", cfg.planner.eta_w);
      get_if(jp, "k_neighbors", cfg.planner.k_neighbors);
      get_if(jp, "delta_match", cfg.planner.delta_match);
      get_if(jp, "bridge_cap", cfg.planner.bridge_cap);
      get_if(jp, "reuse_tree", cfg.planner.reuse_tree);
    }
    if (j.contains("urm")) {
      const auto& ju = j.at("urm");
      get_if(ju, "spacing", cfg.urm.spacing);
      get_if(ju, "stay_penalty_factor", cfg.urm.stay_penalty_factor);
    }
    if (j.contains("ogr")) {
      get_if(j.at("ogr"), "n_og", cfg.ogr.n_og);
    }
    if (j.contains("run")) {
      const auto& jr = j.at("run");
      get_if(jr, "n_runs", cfg.n_runs);
      get_if(jr, "base_seed", cfg.base_seed);
      get_if(jr, "step_cap", cfg.step_cap);
      get_if(jr, "planners", cfg.planners);
      get_if(jr, "jobs", cfg.jobs);
      get_if(jr, "out_dir", cfg.out_dir);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }

  if (cfg.n_runs < 1) throw ConfigError("run.n_runs must be >= 1");
  if (cfg.planner.k_sr < 1) throw ConfigError("planner.k_sr must be >= 1");
  if (cfg.motion.dt <= 0 || cfg.motion.v_max <= 0) {
    throw ConfigError("motion.dt and motion.v_max must be positive");
  }
  if (cfg.cost.xi_p <= 0 || cfg.cost.xi_T <= 0) {
    throw ConfigError("cost weights must be strictly positive");
  }
  for (const std::string& p : cfg.planners) {
    if (!is_known_planner(p)) throw ConfigError("unknown planner: " + p);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return config_from_json(ss.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["env"] = {{"family", to_string(cfg.rnp.family)},
              {"e", cfg.rnp.e},
              {"o", cfg.rnp.o},
              {"seed", cfg.rnp.seed}};
  j["geometry"] = {{"passage_width", cfg.geometry.passage_width},
                   {"wall_thickness", cfg.geometry.wall_thickness},
                   {"infotrap_landmarks", cfg.geometry.infotrap_landmarks},
                   {"landmark_inset", cfg.geometry.landmark_inset},
                   {"obswall_landmarks", cfg.geometry.obswall_landmarks},
                   {"forest_obstacle_side", cfg.geometry.forest_obstacle_side},
                   {"forest_jitter", cfg.geometry.forest_jitter},
                   {"forest_landmarks", cfg.geometry.forest_landmarks},
                   {"robot_radius", cfg.geometry.robot_radius}};
  j["motion"] = {{"dt", cfg.motion.dt},
                 {"sigma_w", cfg.motion.sigma_w},
                 {"sigma_w_bias", cfg.motion.sigma_w_bias},
                 {"v_max", cfg.motion.v_max}};
  j["observation"] = {{"xi_r", cfg.observation.xi_r},
                      {"xi_theta", cfg.observation.xi_theta},
                      {"sigma_rb", cfg.observation.sigma_rb},
                      {"sigma_tb", cfg.observation.sigma_tb},
                      {"sensing_range", cfg.observation.sensing_range}};
  j["cost"] = {{"xi_p", cfg.cost.xi_p}, {"xi_T", cfg.cost.xi_T}};
  j["belief_metric"] = {{"wx", cfg.metric.wx},
                        {"wy", cfg.metric.wy},
                        {"w_theta", cfg.metric.w_theta},
                        {"xi_sigma", cfg.metric.xi_sigma}};
  j["lqg"] = {{"wx", cfg.lqg.Wx(0, 0)}, {"wu", cfg.lqg.Wu(0, 0)}};
  j["initial_cov_xy"] = cfg.initial_cov_xy;
  j["initial_cov_theta"] = cfg.initial_cov_theta;
  j["firm"] = {{"n_nodes", cfg.firm.n_nodes},
               {"epsilon", cfg.firm.epsilon},
               {"connect_radius", cfg.firm.connect_radius},
               {"n_mc", cfg.firm.n_mc},
               {"edge_step_cap", cfg.firm.edge_step_cap},
               {"stabilization_cap", cfg.firm.stabilization_cap},
               {"j_fail", cfg.firm.j_fail},
               {"seed", cfg.firm_seed}};
  j["planner"] = {{"n_p", cfg.planner.n_p},
                  {"k_sr", cfg.planner.k_sr},
                  {"eta_q", cfg.planner.eta_q},
                  {"eta_w", cfg.planner.eta_w},
                  {"k_neighbors", cfg.planner.k_neighbors},
                  {"delta_match", cfg.planner.delta_match},
                  {"bridge_cap", cfg.planner.bridge_cap},
                  {"reuse_tree", cfg.planner.reuse_tree}};
  j["urm"] = {{"spacing", cfg.urm.spacing},
              {"stay_penalty_factor", cfg.urm.stay_penalty_factor}};
  j["ogr"] = {{"n_og", cfg.ogr.n_og}};
  j["run"] = {{"n_runs", cfg.n_runs},      {"base_seed", cfg.base_seed},
              {"step_cap", cfg.step_cap},  {"planners", cfg.planners},
              {"jobs", cfg.jobs},          {"out_dir", cfg.out_dir}};
  return j.dump(2);
}

}  // namespace bvl
