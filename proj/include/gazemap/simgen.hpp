#pragma once

// Seeded sampler of synthetic scenarios: static objects near the walls, a
// blank object fixed at the camera cell, people walking in short linear
// segments, and a semi-Markov attention process driving head pan angles.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gazemap/grid.hpp"
#include "gazemap/render.hpp"

namespace gazemap {

using Rng = std::mt19937_64;

/// Raised when a rejection-sampling loop exhausts its retry budget; the
/// caller may retry with a different seed.
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kMaxResample = 100;

/// Derives an independent stream seed from (base seed, item index).
inline uint64_t derive_seed(uint64_t seed, uint64_t index) {
  uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct GenConfig {
  GridConfig grid;
  int n_people = 3;
  int n_objects = 3;
  int horizon = 20;  ///< T frames
  GridCell camera_cell{3, 3};
  uint64_t seed = 0;

  // placement thresholds, meters
  double d_obj_min = 0.5;         ///< min object-object (and object-camera) spacing
  double d_edge_max = 0.75;       ///< objects must lie within this of a wall
  double d_person_min = 0.3;      ///< min person-person / person-object spacing
  double d_person_edge_min = 0.4; ///< people keep this margin from the walls

  // motion
  double p_stay = 0.95;           ///< per-frame probability of staying still
  double step_sigma = 0.3;        ///< std of the walk-destination draw, meters
  double speed_m_per_frame = 0.1;

  // attention
  double mean_hold_frames = 5.0;
  /// class weights: objects, other people, camera, wander
  std::array<double, 4> target_class_weights{0.80, 0.10, 0.075, 0.025};
  double head_blend = 0.7;        ///< alpha_h: gaze weight in the pan goal
  double pan_noise_sigma = 10.0 * kPi / 180.0;
  double relax_rate = 0.5;        ///< lambda: per-frame relaxation toward the goal

  void validate() const {
    grid.validate();
    if (n_people < 1) throw std::invalid_argument("GenConfig: n_people must be >= 1");
    if (n_objects < 0) throw std::invalid_argument("GenConfig: n_objects must be >= 0");
    if (horizon < 1) throw std::invalid_argument("GenConfig: horizon must be >= 1");
    if (!cell_in_range(camera_cell, grid))
      throw std::invalid_argument("GenConfig: camera cell out of range");
    for (double d : {d_obj_min, d_edge_max, d_person_min, d_person_edge_min,
                     step_sigma, speed_m_per_frame})
      if (!(d > 0.0)) throw std::invalid_argument("GenConfig: thresholds must be positive");
    if (p_stay < 0.0 || p_stay > 1.0)
      throw std::invalid_argument("GenConfig: p_stay must be in [0,1]");
    if (mean_hold_frames < 1.0)
      throw std::invalid_argument("GenConfig: mean_hold_frames must be >= 1");
    double wsum = 0.0;
    for (double w : target_class_weights) {
      if (w < 0.0) throw std::invalid_argument("GenConfig: negative class weight");
      wsum += w;
    }
    if (std::abs(wsum - 1.0) > 1e-9)
      throw std::invalid_argument("GenConfig: class weights must sum to 1");
    if (head_blend < 0.0 || head_blend > 1.0)
      throw std::invalid_argument("GenConfig: head_blend must be in [0,1]");
    if (!(relax_rate > 0.0) || relax_rate > 1.0)
      throw std::invalid_argument("GenConfig: relax_rate must be in (0,1]");
    if (pan_noise_sigma < 0.0)
      throw std::invalid_argument("GenConfig: pan_noise_sigma must be >= 0");
  }
};

/// Latent attention target of one person during one frame.
struct AttentionTarget {
  enum class Kind { Object, Person, Camera, Wander };
  Kind kind = Kind::Wander;
  int index = 0;           ///< object or person index, where applicable
  double wander_dir = 0.0; ///< absolute pan direction for Kind::Wander
};

struct Scenario {
  GridConfig grid;
  std::vector<GridCell> objects;  ///< the M real objects; blank object excluded
  GridCell camera_cell;
  std::vector<Frame> frames;      ///< T frames, constant person count
  std::vector<std::vector<AttentionTarget>> latent_targets;  ///< [person][frame]
  uint64_t seed = 0;
};

namespace detail {

inline double uniform(Rng& rng, double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(rng);
}

inline double normal(Rng& rng, double sigma) {
  if (sigma <= 0.0) return 0.0;
  return std::normal_distribution<double>(0.0, sigma)(rng);
}

/// Hold duration in frames: 1 + Geometric(1/mean), so the mean is `mean`.
inline int sample_hold(Rng& rng, double mean) {
  const double p = 1.0 / mean;
  if (p >= 1.0) return 1;
  return 1 + std::geometric_distribution<int>(p)(rng);
}

inline double edge_distance(WorldPoint p, const GridConfig& g) {
  return std::min(std::min(p.x - g.x_min, g.x_max - p.x),
                  std::min(p.y - g.y_min, g.y_max - p.y));
}

inline double dist(WorldPoint a, WorldPoint b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

}  // namespace detail

/// Uniform object cells, rejection-resampled while too close to a previous
/// object (or the blank object at the camera cell) or too far from every
/// wall. The blank object itself is never resampled and never listed.
inline std::vector<GridCell> sample_objects(const GenConfig& gc, Rng& rng) {
  const GridConfig& g = gc.grid;
  std::vector<GridCell> objects;
  objects.reserve(gc.n_objects);
  for (int m = 0; m < gc.n_objects; ++m) {
    int tries = 0;
    for (;;) {
      if (++tries > kMaxResample)
        throw GenerationError("sample_objects: retry budget exhausted (object " +
                              std::to_string(m) + ")");
      GridCell c{std::uniform_int_distribution<int>(1, g.s_u)(rng),
                 std::uniform_int_distribution<int>(1, g.s_v)(rng)};
      if (cell_distance_m(c, gc.camera_cell, g) < gc.d_obj_min) continue;
      bool close = false;
      for (GridCell prev : objects)
        if (cell_distance_m(c, prev, g) < gc.d_obj_min) { close = true; break; }
      if (close) continue;
      if (detail::edge_distance(cell_center(c, g), g) > gc.d_edge_max) continue;
      objects.push_back(c);
      break;
    }
  }
  return objects;
}

/// Uniform initial person positions, resampled while too close to an object
/// (including the blank object), another person, or a wall.
inline std::vector<WorldPoint> sample_initial_people(
    const GenConfig& gc, std::span<const GridCell> objects, Rng& rng) {
  const GridConfig& g = gc.grid;
  auto admissible = [&](WorldPoint p, std::span<const WorldPoint> placed) {
    if (detail::edge_distance(p, g) < gc.d_person_edge_min) return false;
    if (detail::dist(p, cell_center(gc.camera_cell, g)) < gc.d_person_min)
      return false;
    for (GridCell c : objects)
      if (detail::dist(p, cell_center(c, g)) < gc.d_person_min) return false;
    for (WorldPoint q : placed)
      if (detail::dist(p, q) < gc.d_person_min) return false;
    return true;
  };
  std::vector<WorldPoint> people;
  people.reserve(gc.n_people);
  for (int n = 0; n < gc.n_people; ++n) {
    int tries = 0;
    for (;;) {
      if (++tries > kMaxResample)
        throw GenerationError("sample_initial_people: retry budget exhausted");
      WorldPoint p{detail::uniform(rng, g.x_min, g.x_max),
                   detail::uniform(rng, g.y_min, g.y_max)};
      if (admissible(p, people)) {
        people.push_back(p);
        break;
      }
    }
  }
  return people;
}

/// Per-person walk state: current position plus queued interpolation steps
/// (stored reversed, so the next frame's position is at the back).
struct MotionState {
  std::vector<WorldPoint> positions;
  std::vector<std::vector<WorldPoint>> pending;
};

/// Advances every person by one frame: committed walks consume their queue;
/// idle persons stay with probability p_stay or draw a new destination from
/// a normal around the current position, rejected while out of the
/// admissible region or too close to an object or another person. A person
/// whose redraws all fail stays still this step.
inline void step_motion(MotionState& st, const GenConfig& gc,
                        std::span<const GridCell> objects, Rng& rng) {
  const GridConfig& g = gc.grid;
  auto destination_ok = [&](WorldPoint p, int self) {
    if (detail::edge_distance(p, g) < gc.d_person_edge_min) return false;
    if (detail::dist(p, cell_center(gc.camera_cell, g)) < gc.d_person_min)
      return false;
    for (GridCell c : objects)
      if (detail::dist(p, cell_center(c, g)) < gc.d_person_min) return false;
    for (size_t k = 0; k < st.positions.size(); ++k)
      if (static_cast<int>(k) != self &&
          detail::dist(p, st.positions[k]) < gc.d_person_min)
        return false;
    return true;
  };

  for (size_t n = 0; n < st.positions.size(); ++n) {
    if (!st.pending[n].empty()) {
      st.positions[n] = st.pending[n].back();
      st.pending[n].pop_back();
      continue;
    }
    if (detail::uniform(rng, 0.0, 1.0) < gc.p_stay) continue;
    WorldPoint cur = st.positions[n];
    WorldPoint dest = cur;
    bool found = false;
    for (int tries = 0; tries < kMaxResample; ++tries) {
      WorldPoint cand{cur.x + detail::normal(rng, gc.step_sigma),
                      cur.y + detail::normal(rng, gc.step_sigma)};
      if (destination_ok(cand, static_cast<int>(n))) {
        dest = cand;
        found = true;
        break;
      }
    }
    if (!found) continue;  // stays still this step
    const double d = detail::dist(cur, dest);
    if (d == 0.0) continue;
    const int tau = static_cast<int>(std::ceil(d / gc.speed_m_per_frame));
    for (int k = tau; k >= 2; --k) {  // reversed queue; k=1 applied below
      const double f = static_cast<double>(k) / tau;
      st.pending[n].push_back({cur.x + f * (dest.x - cur.x),
                               cur.y + f * (dest.y - cur.y)});
    }
    const double f1 = 1.0 / tau;
    st.positions[n] = {cur.x + f1 * (dest.x - cur.x),
                       cur.y + f1 * (dest.y - cur.y)};
  }
}

/// Semi-Markov attention chains: geometric hold durations, then a class draw
/// (objects / other people / camera / wander, empty classes renormalized
/// away) and a uniform member within the class.
inline std::vector<std::vector<AttentionTarget>> sample_attention_targets(
    const GenConfig& gc, int n_objects, Rng& rng) {
  const int n = gc.n_people, t_total = gc.horizon;
  std::array<double, 4> w = gc.target_class_weights;
  if (n_objects == 0) w[0] = 0.0;
  if (n < 2) w[1] = 0.0;
  const double wsum = w[0] + w[1] + w[2] + w[3];
  if (!(wsum > 0.0))
    throw GenerationError("sample_attention_targets: no available target class");

  std::vector<std::vector<AttentionTarget>> targets(
      n, std::vector<AttentionTarget>(t_total));
  for (int person = 0; person < n; ++person) {
    int t = 0;
    while (t < t_total) {
      const int hold = detail::sample_hold(rng, gc.mean_hold_frames);
      const double u = detail::uniform(rng, 0.0, wsum);
      AttentionTarget target;
      if (u < w[0]) {
        target.kind = AttentionTarget::Kind::Object;
        target.index = std::uniform_int_distribution<int>(0, n_objects - 1)(rng);
      } else if (u < w[0] + w[1]) {
        target.kind = AttentionTarget::Kind::Person;
        int other = std::uniform_int_distribution<int>(0, n - 2)(rng);
        target.index = other >= person ? other + 1 : other;
      } else if (u < w[0] + w[1] + w[2]) {
        target.kind = AttentionTarget::Kind::Camera;
      } else {
        target.kind = AttentionTarget::Kind::Wander;
        target.wander_dir = wrap_angle(detail::uniform(rng, -kPi, kPi));
      }
      for (int k = t; k < std::min(t + hold, t_total); ++k)
        targets[person][k] = target;
      t += hold;
    }
  }
  return targets;
}

/// One pan update: the goal blends the gaze direction with the previous pan
/// on the shortest arc, and the pan relaxes toward it with Gaussian noise.
inline double head_pan_step(double prev_pan, double gaze_dir,
                            const GenConfig& gc, Rng& rng) {
  const double goal =
      wrap_angle(prev_pan + gc.head_blend * wrap_angle(gaze_dir - prev_pan));
  const double noise = detail::normal(rng, gc.pan_noise_sigma);
  return wrap_angle(prev_pan + gc.relax_rate * wrap_angle(goal - prev_pan) +
                    noise);
}

namespace detail {

/// World direction from `pos` toward the current target; falls back to
/// `fallback` when the target coincides with the person.
inline double gaze_direction(const AttentionTarget& target, WorldPoint pos,
                             const Scenario& s, int frame, double fallback) {
  WorldPoint goal;
  switch (target.kind) {
    case AttentionTarget::Kind::Wander:
      return target.wander_dir;
    case AttentionTarget::Kind::Object:
      goal = cell_center(s.objects[target.index], s.grid);
      break;
    case AttentionTarget::Kind::Camera:
      goal = cell_center(s.camera_cell, s.grid);
      break;
    case AttentionTarget::Kind::Person:
      goal = s.frames[frame].persons[target.index].position;
      break;
  }
  const double dx = goal.x - pos.x, dy = goal.y - pos.y;
  if (dx * dx + dy * dy < 1e-18) return fallback;
  return std::atan2(dy, dx);
}

}  // namespace detail

/// Samples a full scenario: objects, then motion, then latent attention
/// targets, then head pans. Deterministic given the config (seed included).
inline Scenario generate_scenario(const GenConfig& gc) {
  gc.validate();
  Rng rng(gc.seed);

  Scenario s;
  s.grid = gc.grid;
  s.camera_cell = gc.camera_cell;
  s.seed = gc.seed;
  s.objects = sample_objects(gc, rng);

  MotionState motion;
  motion.positions = sample_initial_people(gc, s.objects, rng);
  motion.pending.resize(gc.n_people);
  s.frames.resize(gc.horizon);
  for (int t = 0; t < gc.horizon; ++t) {
    if (t > 0) step_motion(motion, gc, s.objects, rng);
    s.frames[t].persons.resize(gc.n_people);
    for (int n = 0; n < gc.n_people; ++n)
      s.frames[t].persons[n].position = motion.positions[n];
  }

  s.latent_targets = sample_attention_targets(gc, gc.n_objects, rng);

  for (int n = 0; n < gc.n_people; ++n) {
    double pan = 0.0;
    for (int t = 0; t < gc.horizon; ++t) {
      const WorldPoint pos = s.frames[t].persons[n].position;
      const double gaze = detail::gaze_direction(s.latent_targets[n][t], pos,
                                                 s, t, /*fallback=*/pan);
      if (t == 0) {
        pan = wrap_angle(gaze + detail::normal(rng, gc.pan_noise_sigma));
      } else {
        pan = head_pan_step(pan, gaze, gc, rng);
      }
      s.frames[t].persons[n].pan = pan;
    }
  }
  return s;
}

/// Scenario `index` of a seeded stream. The retry budget inside a single
/// generation attempt can run out on unlucky seeds; this retries with
/// per-attempt derived seeds so streams stay deterministic and density
/// failures stay contained.
inline Scenario sample_scenario(const GenConfig& base, uint64_t stream_seed,
                                uint64_t index, int max_attempts = 100) {
  GenConfig gc = base;
  const uint64_t s0 = derive_seed(stream_seed, index);
  for (int k = 0; k < max_attempts; ++k) {
    gc.seed = derive_seed(s0, static_cast<uint64_t>(k));
    try {
      return generate_scenario(gc);
    } catch (const GenerationError&) {
    }
  }
  throw GenerationError("sample_scenario: repeated generation failures");
}

/// Independent re-check of every Scenario invariant; throws on violation.
inline void validate_scenario(const Scenario& s, const GenConfig& gc) {
  const GridConfig& g = gc.grid;
  const double tol = 1e-9;
  if (!(s.grid == g)) throw std::runtime_error("scenario: grid config mismatch");
  if (static_cast<int>(s.objects.size()) != gc.n_objects)
    throw std::runtime_error("scenario: wrong object count");
  for (size_t i = 0; i < s.objects.size(); ++i) {
    if (!cell_in_range(s.objects[i], g))
      throw std::runtime_error("scenario: object out of range");
    if (s.objects[i] == s.camera_cell)
      throw std::runtime_error("scenario: object placed on the camera cell");
    if (cell_distance_m(s.objects[i], s.camera_cell, g) < gc.d_obj_min - tol)
      throw std::runtime_error("scenario: object too close to the camera");
    if (detail::edge_distance(cell_center(s.objects[i], g), g) >
        gc.d_edge_max + tol)
      throw std::runtime_error("scenario: object too far from every wall");
    for (size_t j = i + 1; j < s.objects.size(); ++j)
      if (cell_distance_m(s.objects[i], s.objects[j], g) < gc.d_obj_min - tol)
        throw std::runtime_error("scenario: objects too close together");
  }
  if (static_cast<int>(s.frames.size()) != gc.horizon)
    throw std::runtime_error("scenario: wrong frame count");
  for (const Frame& f : s.frames) {
    if (static_cast<int>(f.persons.size()) != gc.n_people)
      throw std::runtime_error("scenario: wrong person count");
    for (const PersonState& p : f.persons) {
      if (detail::edge_distance(p.position, g) < gc.d_person_edge_min - tol)
        throw std::runtime_error("scenario: person outside the admissible region");
      if (!(p.pan > -kPi - tol) || !(p.pan <= kPi + tol))
        throw std::runtime_error("scenario: pan not wrapped");
    }
  }
  if (static_cast<int>(s.latent_targets.size()) != gc.n_people)
    throw std::runtime_error("scenario: wrong latent target shape");
  for (int n = 0; n < gc.n_people; ++n) {
    if (static_cast<int>(s.latent_targets[n].size()) != gc.horizon)
      throw std::runtime_error("scenario: wrong latent target length");
    for (const AttentionTarget& t : s.latent_targets[n]) {
      if (t.kind == AttentionTarget::Kind::Object &&
          (t.index < 0 || t.index >= gc.n_objects))
        throw std::runtime_error("scenario: latent object index out of range");
      if (t.kind == AttentionTarget::Kind::Person &&
          (t.index < 0 || t.index >= gc.n_people || t.index == n))
        throw std::runtime_error("scenario: latent person index invalid");
    }
  }
}

}  // namespace gazemap
