#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "bvl/models.hpp"
#include "bvl/rng.hpp"
#include "bvl/state.hpp"

namespace bvl {

// Axis-aligned rectangular risk region.
struct Obstacle {
  double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;

  bool contains(double x, double y, double inflate = 0.0) const {
    return x >= xmin - inflate && x <= xmax + inflate && y >= ymin - inflate &&
           y <= ymax + inflate;
  }
};

struct Environment {
  double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;  // bounds
  std::vector<Obstacle> obstacles;
  LandmarkSet landmarks;
  State start;
  State goal;
  double robot_radius = 0.2;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
};

enum class RnpFamily { InfoTrap, ObsWall, Forest };

std::string to_string(RnpFamily f);
RnpFamily rnp_family_from_string(const std::string& s);

// Parameterized rover navigation problem: e is the environment size, o the
// obstacle size (InfoTrap/ObsWall wall length) or count (Forest).
struct RnpSpec {
  RnpFamily family = RnpFamily::InfoTrap;
  double e = 10.0;
  double o = 3.0;
  std::uint64_t seed = 0;
};

// Geometry constants not determined by (e, o); kept in config files shipped
// with the repo so benchmark environments are reproducible.
struct RnpGeometry {
  double passage_width = 1.0;       // InfoTrap gap between the flanking walls
  double wall_thickness = 0.4;
  int infotrap_landmarks = 4;       // evenly spaced along the top edge
  double landmark_inset = 0.5;
  int obswall_landmarks = 8;        // around the perimeter
  double forest_obstacle_side = 0.8;
  double forest_jitter = 0.4;       // +- uniform, seeded
  int forest_landmarks = 12;        // scattered uniformly, seeded
  double robot_radius = 0.2;
};

struct InfeasibleSpecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InfeasibleEnvironmentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Deterministic benchmark environment for a spec. Pure function of
// (spec, geometry).
Environment generate_rnp(const RnpSpec& spec, const RnpGeometry& geo = {});

// Point collision test: robot disk vs obstacles inflated by robot_radius, or
// the disk leaving the bounds. Boundary contact counts as collision.
bool collides_point(const State& a, const Environment& env);

// Swept test of the segment a->b against the inflated obstacles and bounds.
bool collides_segment(const State& a, const State& b, const Environment& env);

// Collision test for one executed motion: endpoint and swept-segment tests.
inline bool motion_collides(const State& a, const State& b, const Environment& env) {
  return collides_point(b, env) || collides_segment(a, b, env);
}

// Uniform sample over the free subset of the bounds, heading uniform in
// (-pi, pi]. Throws InfeasibleEnvironmentError after 10^4 consecutive
// rejections.
State sample_free_state(const Environment& env, Rng& rng);

// JSON document for an environment (bounds, obstacles, landmarks, start,
// goal, robot_radius); numbers round-trip losslessly.
std::string serialize_environment(const Environment& env);
Environment deserialize_environment(const std::string& text);

// FNV-1a hash of the canonical serialization; graph files carry it so runs
// can detect a graph/environment mismatch.
std::uint64_t environment_hash(const Environment& env);

}  // namespace bvl
