#include "bvl/episode.hpp"

#include <cstring>
#include <sstream>

#include "json.hpp"

namespace bvl {

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::Goal: return "goal";
    case Outcome::Collision: return "collision";
    case Outcome::Cap: return "cap";
    case Outcome::Error: return "error";
  }
  return "?";
}

Outcome outcome_from_string(const std::string& s) {
  if (s == "goal") return Outcome::Goal;
  if (s == "collision") return Outcome::Collision;
  if (s == "cap") return Outcome::Cap;
  if (s == "error") return Outcome::Error;
  throw std::invalid_argument("unknown outcome: " + s);
}

std::uint64_t observation_hash(const Observation& z) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xFF;
      h *= 0x100000001B3ULL;
    }
  };
  for (const Reading& r : z.readings) {
    mix(static_cast<std::uint64_t>(r.landmark_id));
    std::uint64_t bits;
    static_assert(sizeof(double) == sizeof(std::uint64_t));
    std::memcpy(&bits, &r.range, 8);
    mix(bits);
    std::memcpy(&bits, &r.bearing, 8);
    mix(bits);
  }
  return h;
}

SimWorld::ExecStep SimWorld::execute(const State& x, const GaussianBelief& b, const Control& u,
                                     Rng& rng) const {
  ExecStep out;
  auto [xp, z] = generative_step(x, u, env->landmarks, mm, om, rng);
  out.x = xp;
  out.z = z;
  if (motion_collides(x, xp, *env)) {
    out.collided = true;
    out.b = b;
    return out;
  }
  out.b = ekf_update(ekf_predict(b, u, mm), z, om, env->landmarks);
  out.cost = step_cost(out.b, cw);
  return out;
}

namespace {

nlohmann::json state_json(const State& s) { return {s.x, s.y, s.theta}; }

State state_from(const nlohmann::json& j) { return {j.at(0), j.at(1), j.at(2)}; }

}  // namespace

std::string episode_to_jsonl(const EpisodeLog& log) {
  std::ostringstream out;
  nlohmann::json header;
  header["type"] = "header";
  header["planner"] = log.planner;
  header["env"] = log.env_name;
  header["seed"] = log.seed;
  out << header.dump() << "\n";

  for (const StepRecord& s : log.steps) {
    nlohmann::json j;
    j["type"] = "step";
    j["k"] = s.k;
    j["state"] = state_json(s.state);
    j["control"] = {s.control.vx, s.control.vy, s.control.vtheta};
    j["obs"] = {{"n", s.obs_count}, {"hash", s.obs_hash}};
    j["belief_mean"] = state_json(s.belief_mean);
    j["cov_trace"] = s.cov_trace;
    j["step_cost"] = s.step_cost;
    j["cum_cost"] = s.cum_cost;
    out << j.dump() << "\n";
  }

  nlohmann::json tail;
  tail["type"] = "result";
  tail["outcome"] = to_string(log.outcome);
  tail["steps"] = log.n_steps;
  tail["total_cost"] = log.total_cost;
  tail["sum_trace"] = log.sum_trace;
  tail["fallback_used"] = log.fallback_used;
  tail["wall_time_s"] = log.wall_time_s;
  out << tail.dump() << "\n";
  return out.str();
}

EpisodeLog episode_from_jsonl(const std::string& text) {
  EpisodeLog log;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  bool have_result = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    std::string type = j.at("type");
    if (type == "header") {
      log.planner = j.at("planner");
      log.env_name = j.at("env");
      log.seed = j.at("seed").get<std::uint64_t>();
      have_header = true;
    } else if (type == "step") {
      StepRecord s;
      s.k = j.at("k");
      s.state = state_from(j.at("state"));
      s.control = {j.at("control").at(0), j.at("control").at(1), j.at("control").at(2)};
      s.obs_count = j.at("obs").at("n");
      s.obs_hash = j.at("obs").at("hash").get<std::uint64_t>();
      s.belief_mean = state_from(j.at("belief_mean"));
      s.cov_trace = j.at("cov_trace");
      s.step_cost = j.at("step_cost");
      s.cum_cost = j.at("cum_cost");
      log.steps.push_back(s);
    } else if (type == "result") {
      log.outcome = outcome_from_string(j.at("outcome"));
      log.n_steps = j.at("steps");
      log.total_cost = j.at("total_cost");
      log.sum_trace = j.at("sum_trace");
      log.fallback_used = j.at("fallback_used");
      log.wall_time_s = j.at("wall_time_s");
      have_result = true;
    }
  }
  if (!have_header || !have_result) {
    throw std::runtime_error("episode_from_jsonl: truncated log");
  }
  return log;
}

}  // namespace bvl
