#pragma once

// Gaze heat-maps (per-person cones, per-frame means, cone intersections) and
// ground-truth object heat-maps, all rendered on the top-view grid.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gazemap/grid.hpp"

namespace gazemap {

/// One tracked person: 2D head position and head pan angle.
struct PersonState {
  WorldPoint position;
  double pan = 0.0;  ///< radians, wrapped into (-pi, pi]
};

struct Frame {
  std::vector<PersonState> persons;
};

/// A sequence of T per-frame gaze heat-maps over a shared grid.
class GazeSequence {
 public:
  GazeSequence(GridConfig cfg, std::vector<HeatMap> maps)
      : cfg_(cfg), maps_(std::move(maps)) {
    cfg_.validate();
    if (maps_.empty())
      throw std::invalid_argument("GazeSequence: needs at least one frame");
    for (const HeatMap& m : maps_)
      if (!(m.config() == cfg_))
        throw std::invalid_argument("GazeSequence: mixed grid configs");
  }

  const GridConfig& config() const { return cfg_; }
  const std::vector<HeatMap>& maps() const { return maps_; }
  int length() const { return static_cast<int>(maps_.size()); }

 private:
  GridConfig cfg_;
  std::vector<HeatMap> maps_;
};

namespace detail {

// Marks hit cells (1) of one person's gaze cone into `hits` (size s_u*s_v).
// A cell is hit when any of 5 sample points (center + 4 corners) lies within
// angular distance epsilon of the pan direction; the person's own cell is
// forced to 0. The |wrap(angle - pan)| < eps test is evaluated as
// r*cos(delta) > r*cos(eps), which avoids atan2.
inline void rasterize_cone(const PersonState& p, const GridConfig& cfg,
                           double epsilon, unsigned char* hits) {
  if (!(epsilon > 0.0))
    throw std::invalid_argument("rasterize_cone: epsilon must be > 0");
  if (!std::isfinite(p.position.x) || !std::isfinite(p.position.y) ||
      !std::isfinite(p.pan))
    throw std::invalid_argument("rasterize_cone: non-finite person state");
  const double cos_eps = std::cos(std::min(epsilon, kPi));
  const bool full_circle = epsilon >= kPi;
  const double cphi = std::cos(p.pan), sphi = std::sin(p.pan);
  const double w = cfg.cell_width(), h = cfg.cell_height();
  const double px = p.position.x, py = p.position.y;

  auto in_cone = [&](double qx, double qy) {
    const double dx = qx - px, dy = qy - py;
    const double r2 = dx * dx + dy * dy;
    if (r2 < 1e-18) return false;  // direction undefined at the person itself
    if (full_circle) return true;
    // dot > r*cos(eps), compared in squares to avoid the sqrt
    const double dot = dx * cphi + dy * sphi;
    if (cos_eps >= 0.0) return dot > 0.0 && dot * dot > cos_eps * cos_eps * r2;
    return dot >= 0.0 || dot * dot < cos_eps * cos_eps * r2;
  };

  size_t idx = 0;
  for (int u = 1; u <= cfg.s_u; ++u) {
    const double x0 = cfg.x_min + (u - 1) * w;
    for (int v = 1; v <= cfg.s_v; ++v, ++idx) {
      const double y0 = cfg.y_min + (v - 1) * h;
      hits[idx] = (in_cone(x0 + 0.5 * w, y0 + 0.5 * h) ||
                   in_cone(x0, y0) || in_cone(x0 + w, y0) ||
                   in_cone(x0, y0 + h) || in_cone(x0 + w, y0 + h))
                      ? 1
                      : 0;
    }
  }
  GridCell own = world_to_cell(p.position, cfg);
  hits[cell_index(own, cfg)] = 0;
}

}  // namespace detail

/// Binary gaze-cone map of a single person.
inline HeatMap render_cone(const PersonState& p, const GridConfig& cfg,
                           double epsilon) {
  cfg.validate();
  std::vector<unsigned char> hits(cfg.cell_count());
  detail::rasterize_cone(p, cfg, epsilon, hits.data());
  std::vector<double> vals(hits.begin(), hits.end());
  return HeatMap(cfg, std::move(vals), /*normalized=*/true);
}

/// Mean of the per-person cone maps; all-zero when the frame is empty.
inline HeatMap frame_gaze_map(const Frame& f, const GridConfig& cfg,
                              double epsilon) {
  cfg.validate();
  const size_t n_cells = static_cast<size_t>(cfg.cell_count());
  std::vector<double> acc(n_cells, 0.0);
  if (!f.persons.empty()) {
    std::vector<unsigned char> hits(n_cells);
    for (const PersonState& p : f.persons) {
      detail::rasterize_cone(p, cfg, epsilon, hits.data());
      for (size_t i = 0; i < n_cells; ++i) acc[i] += hits[i];
    }
    const double inv_n = 1.0 / static_cast<double>(f.persons.size());
    for (double& x : acc) x *= inv_n;
  }
  return HeatMap(cfg, std::move(acc), /*normalized=*/true);
}

/// Elementwise mean of the sequence's maps.
inline HeatMap mean_gaze_map(const GazeSequence& s) {
  const GridConfig& cfg = s.config();
  std::vector<double> acc(cfg.cell_count(), 0.0);
  for (const HeatMap& m : s.maps())
    for (size_t i = 0; i < acc.size(); ++i) acc[i] += m.values()[i];
  const double inv_t = 1.0 / s.length();
  for (double& x : acc) x *= inv_t;
  return HeatMap(cfg, std::move(acc), /*normalized=*/true);
}

/// Binary map of cells covered by at least two persons' cones.
inline HeatMap intersection_map(const Frame& f, const GridConfig& cfg,
                                double epsilon) {
  cfg.validate();
  const size_t n_cells = static_cast<size_t>(cfg.cell_count());
  std::vector<int> count(n_cells, 0);
  std::vector<unsigned char> hits(n_cells);
  for (const PersonState& p : f.persons) {
    detail::rasterize_cone(p, cfg, epsilon, hits.data());
    for (size_t i = 0; i < n_cells; ++i) count[i] += hits[i];
  }
  std::vector<double> vals(n_cells, 0.0);
  for (size_t i = 0; i < n_cells; ++i) vals[i] = count[i] >= 2 ? 1.0 : 0.0;
  return HeatMap(cfg, std::move(vals), /*normalized=*/true);
}

/// Time-mean of the per-frame intersection maps.
inline HeatMap mean_intersection_map(std::span<const Frame> frames,
                                     const GridConfig& cfg, double epsilon) {
  cfg.validate();
  if (frames.empty())
    throw std::invalid_argument("mean_intersection_map: empty sequence");
  std::vector<double> acc(cfg.cell_count(), 0.0);
  for (const Frame& f : frames) {
    HeatMap m = intersection_map(f, cfg, epsilon);
    for (size_t i = 0; i < acc.size(); ++i) acc[i] += m.values()[i];
  }
  const double inv_t = 1.0 / static_cast<double>(frames.size());
  for (double& x : acc) x *= inv_t;
  return HeatMap(cfg, std::move(acc), /*normalized=*/true);
}

/// Ground-truth object map: max over objects of a Gaussian peak centered at
/// the object cell, with distances in cell-index units.
inline HeatMap object_heatmap(std::span<const GridCell> objects,
                              const GridConfig& cfg, double sigma_omega) {
  cfg.validate();
  if (!(sigma_omega > 0.0))
    throw std::invalid_argument("object_heatmap: sigma must be > 0");
  for (GridCell c : objects)
    if (!cell_in_range(c, cfg))
      throw std::invalid_argument("object_heatmap: object cell out of range");
  std::vector<double> vals(cfg.cell_count(), 0.0);
  const double inv_2s2 = 1.0 / (2.0 * sigma_omega * sigma_omega);
  size_t idx = 0;
  for (int u = 1; u <= cfg.s_u; ++u) {
    for (int v = 1; v <= cfg.s_v; ++v, ++idx) {
      double best = 0.0;
      for (GridCell c : objects) {
        const double du = u - c.u, dv = v - c.v;
        best = std::max(best, std::exp(-(du * du + dv * dv) * inv_2s2));
      }
      vals[idx] = best;
    }
  }
  return HeatMap(cfg, std::move(vals), /*normalized=*/true);
}

/// Per-frame gaze maps for a whole sequence of frames.
inline GazeSequence render_gaze_sequence(std::span<const Frame> frames,
                                         const GridConfig& cfg,
                                         double epsilon) {
  if (frames.empty())
    throw std::invalid_argument("render_gaze_sequence: empty sequence");
  std::vector<HeatMap> maps;
  maps.reserve(frames.size());
  for (const Frame& f : frames) maps.push_back(frame_gaze_map(f, cfg, epsilon));
  return GazeSequence(cfg, std::move(maps));
}

}  // namespace gazemap
