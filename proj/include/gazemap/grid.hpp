#pragma once

// World <-> grid geometry and the heat-map container used by every other
// module. The scene is a bounded room discretized into an s_u x s_v grid of
// cells with 1-based indices; heat-maps attach a real value to each cell.

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gazemap {

inline constexpr double kPi = 3.14159265358979323846;

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * kPi);
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

struct GridConfig {
  int s_u = 32;  ///< cell count along x
  int s_v = 32;  ///< cell count along y
  double x_min = 0.0;
  double x_max = 3.0;  // meters
  double y_min = 0.0;
  double y_max = 3.0;

  void validate() const {
    if (s_u < 2 || s_v < 2)
      throw std::invalid_argument("GridConfig: s_u and s_v must be >= 2");
    if (!(x_min < x_max) || !(y_min < y_max))
      throw std::invalid_argument("GridConfig: empty world bounds");
    if (!std::isfinite(x_min) || !std::isfinite(x_max) ||
        !std::isfinite(y_min) || !std::isfinite(y_max))
      throw std::invalid_argument("GridConfig: non-finite bounds");
  }

  double cell_width() const { return (x_max - x_min) / s_u; }
  double cell_height() const { return (y_max - y_min) / s_v; }
  int cell_count() const { return s_u * s_v; }

  bool operator==(const GridConfig&) const = default;
};

/// 1-based grid cell indices, u along x and v along y.
struct GridCell {
  int u = 1;
  int v = 1;
  bool operator==(const GridCell&) const = default;
  auto operator<=>(const GridCell&) const = default;
};

struct WorldPoint {
  double x = 0.0;
  double y = 0.0;  // meters
  bool operator==(const WorldPoint&) const = default;
};

inline bool cell_in_range(GridCell c, const GridConfig& cfg) {
  return c.u >= 1 && c.u <= cfg.s_u && c.v >= 1 && c.v <= cfg.s_v;
}

/// Maps a world point to its grid cell: u = ceil(s_u*(x-x_min)/(x_max-x_min)),
/// clamped into [1, s_u] so the lower bound (index 0) and out-of-bounds points
/// land on the nearest border cell.
inline GridCell world_to_cell(WorldPoint p, const GridConfig& cfg) {
  cfg.validate();
  if (!std::isfinite(p.x) || !std::isfinite(p.y))
    throw std::invalid_argument("world_to_cell: non-finite coordinates");
  auto idx = [](double x, double lo, double hi, int n) {
    int i = static_cast<int>(std::ceil(n * (x - lo) / (hi - lo)));
    return std::min(std::max(i, 1), n);
  };
  return {idx(p.x, cfg.x_min, cfg.x_max, cfg.s_u),
          idx(p.y, cfg.y_min, cfg.y_max, cfg.s_v)};
}

/// World coordinates of the cell's center.
inline WorldPoint cell_center(GridCell c, const GridConfig& cfg) {
  cfg.validate();
  if (!cell_in_range(c, cfg))
    throw std::invalid_argument("cell_center: cell out of range");
  return {cfg.x_min + (c.u - 0.5) * cfg.cell_width(),
          cfg.y_min + (c.v - 0.5) * cfg.cell_height()};
}

/// Euclidean distance between cell centers, in meters.
inline double cell_distance_m(GridCell a, GridCell b, const GridConfig& cfg) {
  WorldPoint pa = cell_center(a, cfg);
  WorldPoint pb = cell_center(b, cfg);
  return std::hypot(pa.x - pb.x, pa.y - pb.y);
}

/// Real-valued map over the grid. Values are validated on construction;
/// `normalized` marks maps claiming the stronger [0,1] invariant (gaze and
/// object heat-maps). Treat as immutable after construction.
class HeatMap {
 public:
  explicit HeatMap(GridConfig cfg, bool normalized = true)
      : cfg_(cfg), normalized_(normalized),
        values_(static_cast<size_t>(cfg.s_u) * cfg.s_v, 0.0) {
    cfg_.validate();
  }

  HeatMap(GridConfig cfg, std::vector<double> values, bool normalized)
      : cfg_(cfg), normalized_(normalized), values_(std::move(values)) {
    cfg_.validate();
    if (values_.size() != static_cast<size_t>(cfg_.s_u) * cfg_.s_v)
      throw std::invalid_argument("HeatMap: value count does not match grid");
    for (double& x : values_) {
      if (!std::isfinite(x)) throw std::invalid_argument("HeatMap: non-finite value");
      if (normalized_) {
        if (x < -1e-9 || x > 1.0 + 1e-9)
          throw std::invalid_argument("HeatMap: value outside [0,1] on a normalized map");
        x = std::min(std::max(x, 0.0), 1.0);
      }
    }
  }

  const GridConfig& config() const { return cfg_; }
  bool normalized() const { return normalized_; }
  const std::vector<double>& values() const { return values_; }

  /// Value at 1-based (u, v).
  double at(int u, int v) const {
    return values_[static_cast<size_t>(u - 1) * cfg_.s_v + (v - 1)];
  }
  double at(GridCell c) const { return at(c.u, c.v); }

  double max_value() const {
    double m = values_.empty() ? 0.0 : values_[0];
    for (double x : values_) m = std::max(m, x);
    return m;
  }

  double min_value() const {
    double m = values_.empty() ? 0.0 : values_[0];
    for (double x : values_) m = std::min(m, x);
    return m;
  }

 private:
  GridConfig cfg_;
  bool normalized_;
  std::vector<double> values_;
};

/// Row-major index of 1-based (u, v): (u-1)*s_v + (v-1).
inline size_t cell_index(GridCell c, const GridConfig& cfg) {
  return static_cast<size_t>(c.u - 1) * cfg.s_v + (c.v - 1);
}

}  // namespace gazemap
