#include "bvl/world.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace bvl {

std::string to_string(RnpFamily f) {
  switch (f) {
    case RnpFamily::InfoTrap: return "InfoTrap";
    case RnpFamily::ObsWall: return "ObsWall";
    case RnpFamily::Forest: return "Forest";
  }
  return "?";
}

RnpFamily rnp_family_from_string(const std::string& s) {
  if (s == "InfoTrap") return RnpFamily::InfoTrap;
  if (s == "ObsWall") return RnpFamily::ObsWall;
  if (s == "Forest") return RnpFamily::Forest;
  throw std::invalid_argument("unknown RNP family: " + s);
}

namespace {

void add_perimeter_landmarks(Environment& env, int count, double inset) {
  // Evenly spaced along the boundary rectangle, starting at the bottom-left
  // corner and walking counterclockwise.
  double w = env.width() - 2 * inset;
  double h = env.height() - 2 * inset;
  double perim = 2 * (w + h);
  for (int i = 0; i < count; ++i) {
    double t = perim * i / count;
    double x, y;
    if (t < w) {
      x = env.xmin + inset + t;
      y = env.ymin + inset;
    } else if (t < w + h) {
      x = env.xmax - inset;
      y = env.ymin + inset + (t - w);
    } else if (t < 2 * w + h) {
      x = env.xmax - inset - (t - w - h);
      y = env.ymax - inset;
    } else {
      x = env.xmin + inset;
      y = env.ymax - inset - (t - 2 * w - h);
    }
    env.landmarks.push_back({static_cast<int>(env.landmarks.size()), x, y});
  }
}

Environment make_infotrap(const RnpSpec& spec, const RnpGeometry& geo) {
  double e = spec.e;
  double o = spec.o;
  if (2 * o + geo.passage_width > e) {
    throw InfeasibleSpecError("InfoTrap: flanking walls of length " + std::to_string(o) +
                              " leave no passage in a " + std::to_string(e) + " m environment");
  }
  Environment env;
  env.xmax = e;
  env.ymax = e;
  env.robot_radius = geo.robot_radius;

  double cx = e / 2.0;
  double cy = e / 2.0;
  double half_t = geo.wall_thickness / 2.0;
  double gap = geo.passage_width / 2.0;
  // Two vertical walls flanking a central passage.
  env.obstacles.push_back({cx - half_t, cy + gap, cx + half_t, cy + gap + o});
  env.obstacles.push_back({cx - half_t, cy - gap - o, cx + half_t, cy - gap});

  for (int i = 0; i < geo.infotrap_landmarks; ++i) {
    double x = e * (i + 1) / (geo.infotrap_landmarks + 1);
    env.landmarks.push_back({i, x, e - geo.landmark_inset});
  }

  env.start = {0.1 * e, cy, 0.0};
  env.goal = {0.9 * e, cy, 0.0};
  return env;
}

Environment make_obswall(const RnpSpec& spec, const RnpGeometry& geo) {
  double e = spec.e;
  double o = spec.o;
  if (o + 2.0 > e) {
    throw InfeasibleSpecError("ObsWall: wall of length " + std::to_string(o) +
                              " leaves no corridor in a " + std::to_string(e) + " m environment");
  }
  Environment env;
  env.xmax = e;
  env.ymax = e;
  env.robot_radius = geo.robot_radius;

  double cx = e / 2.0;
  double cy = e / 2.0;
  double half_t = geo.wall_thickness / 2.0;
  env.obstacles.push_back({cx - half_t, cy - o / 2.0, cx + half_t, cy + o / 2.0});

  add_perimeter_landmarks(env, geo.obswall_landmarks, geo.landmark_inset);

  env.start = {0.1 * e, cy, 0.0};
  env.goal = {0.9 * e, cy, 0.0};
  return env;
}

Environment make_forest(const RnpSpec& spec, const RnpGeometry& geo) {
  double e = spec.e;
  int count = static_cast<int>(spec.o);
  Environment env;
  env.xmax = e;
  env.ymax = e;
  env.robot_radius = geo.robot_radius;
  env.start = {0.075 * e, 0.075 * e, 0.0};
  env.goal = {0.925 * e, 0.925 * e, 0.0};

  int grid = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(count))));
  double spacing = e / (grid + 1);
  if (geo.forest_obstacle_side >= spacing) {
    throw InfeasibleSpecError("Forest: obstacle side " +
                              std::to_string(geo.forest_obstacle_side) +
                              " >= grid spacing " + std::to_string(spacing));
  }

  Rng rng = Rng(spec.seed).derive(stream::kEnvGen);
  double half = geo.forest_obstacle_side / 2.0;
  double clear = env.robot_radius + 0.3;  // keep start/goal approachable
  int placed = 0;
  for (int gy = 0; gy < grid && placed < count; ++gy) {
    for (int gx = 0; gx < grid && placed < count; ++gx) {
      double cx = spacing * (gx + 1) + rng.uniform(-geo.forest_jitter, geo.forest_jitter);
      double cy = spacing * (gy + 1) + rng.uniform(-geo.forest_jitter, geo.forest_jitter);
      // Push obstacles off the start/goal discs, deterministically.
      for (const State* s : {&env.start, &env.goal}) {
        double need = half + clear;
        if (std::abs(cx - s->x) < need && std::abs(cy - s->y) < need) {
          double dx = cx - s->x;
          double dy = cy - s->y;
          if (std::abs(dx) >= std::abs(dy)) {
            cx = s->x + (dx >= 0 ? need : -need);
          } else {
            cy = s->y + (dy >= 0 ? need : -need);
          }
        }
      }
      cx = std::clamp(cx, half, e - half);
      cy = std::clamp(cy, half, e - half);
      env.obstacles.push_back({cx - half, cy - half, cx + half, cy + half});
      ++placed;
    }
  }

  for (int i = 0; i < geo.forest_landmarks; ++i) {
    double inset = geo.landmark_inset;
    env.landmarks.push_back({i, rng.uniform(env.xmin + inset, env.xmax - inset),
                             rng.uniform(env.ymin + inset, env.ymax - inset)});
  }
  return env;
}

}  // namespace

Environment generate_rnp(const RnpSpec& spec, const RnpGeometry& geo) {
  Environment env;
  switch (spec.family) {
    case RnpFamily::InfoTrap: env = make_infotrap(spec, geo); break;
    case RnpFamily::ObsWall: env = make_obswall(spec, geo); break;
    case RnpFamily::Forest: env = make_forest(spec, geo); break;
  }
  if (collides_point(env.start, env) || collides_point(env.goal, env)) {
    throw InfeasibleSpecError("generated start or goal is not collision-free");
  }
  return env;
}

bool collides_point(const State& a, const Environment& env) {
  double r = env.robot_radius;
  if (a.x < env.xmin + r || a.x > env.xmax - r || a.y < env.ymin + r || a.y > env.ymax - r) {
    return true;
  }
  for (const Obstacle& ob : env.obstacles) {
    if (ob.contains(a.x, a.y, r)) return true;
  }
  return false;
}

namespace {

// Liang-Barsky segment vs axis-aligned box, boundary contact inclusive.
bool segment_hits_box(double x0, double y0, double x1, double y1, double bx0, double by0,
                      double bx1, double by1) {
  double dx = x1 - x0;
  double dy = y1 - y0;
  double t0 = 0.0, t1 = 1.0;
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {x0 - bx0, bx1 - x0, y0 - by0, by1 - y0};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;  // parallel and outside this slab
    } else {
      double t = q[i] / p[i];
      if (p[i] < 0.0) {
        if (t > t1) return false;
        if (t > t0) t0 = t;
      } else {
        if (t < t0) return false;
        if (t < t1) t1 = t;
      }
    }
  }
  return t0 <= t1;
}

}  // namespace

bool collides_segment(const State& a, const State& b, const Environment& env) {
  if (collides_point(a, env) || collides_point(b, env)) return true;
  double r = env.robot_radius;
  for (const Obstacle& ob : env.obstacles) {
    if (segment_hits_box(a.x, a.y, b.x, b.y, ob.xmin - r, ob.ymin - r, ob.xmax + r,
                         ob.ymax + r)) {
      return true;
    }
  }
  return false;
}

State sample_free_state(const Environment& env, Rng& rng) {
  double r = env.robot_radius;
  for (int attempt = 0; attempt < 10000; ++attempt) {
    State s;
    s.x = rng.uniform(env.xmin + r, env.xmax - r);
    s.y = rng.uniform(env.ymin + r, env.ymax - r);
    s.theta = wrap_angle(rng.uniform(-kPi, kPi));
    if (!collides_point(s, env)) return s;
  }
  throw InfeasibleEnvironmentError("sample_free_state: 10^4 consecutive rejections");
}

std::string serialize_environment(const Environment& env) {
  nlohmann::json j;
  j["bounds"] = {env.xmin, env.ymin, env.xmax, env.ymax};
  j["robot_radius"] = env.robot_radius;
  j["start"] = {env.start.x, env.start.y, env.start.theta};
  j["goal"] = {env.goal.x, env.goal.y, env.goal.theta};
  auto obstacles = nlohmann::json::array();
  for (const Obstacle& ob : env.obstacles) {
    obstacles.push_back({ob.xmin, ob.ymin, ob.xmax, ob.ymax});
  }
  j["obstacles"] = obstacles;
  auto landmarks = nlohmann::json::array();
  for (const Landmark& lm : env.landmarks) {
    landmarks.push_back({{"id", lm.id}, {"x", lm.x}, {"y", lm.y}});
  }
  j["landmarks"] = landmarks;
  return j.dump(2);
}

Environment deserialize_environment(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  Environment env;
  env.xmin = j.at("bounds").at(0);
  env.ymin = j.at("bounds").at(1);
  env.xmax = j.at("bounds").at(2);
  env.ymax = j.at("bounds").at(3);
  env.robot_radius = j.at("robot_radius");
  env.start = {j.at("start").at(0), j.at("start").at(1), j.at("start").at(2)};
  env.goal = {j.at("goal").at(0), j.at("goal").at(1), j.at("goal").at(2)};
  for (const auto& ob : j.at("obstacles")) {
    env.obstacles.push_back({ob.at(0), ob.at(1), ob.at(2), ob.at(3)});
  }
  for (const auto& lm : j.at("landmarks")) {
    env.landmarks.push_back({lm.at("id"), lm.at("x"), lm.at("y")});
  }
  return env;
}

std::uint64_t environment_hash(const Environment& env) {
  std::string s = serialize_environment(env);
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace bvl
