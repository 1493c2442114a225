#pragma once

// Local-maxima extraction on heat-maps, plus the two detectors that need no
// training (peaks of the mean gaze map, peaks of the mean intersection map).

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gazemap/grid.hpp"
#include "gazemap/render.hpp"

namespace gazemap {

struct PeakConfig {
  int neighborhood_radius = 2;  ///< 2 -> 5x5 sliding window
  std::function<double(double)> shrink = [](double x) { return std::log1p(x); };
  std::string shrink_name = "log1p";
};

/// Cells that are maxima of their clipped (2r+1)^2 neighborhood, have value
/// >= shrink(global max), and are strictly positive. Plateaus of equal-valued
/// 8-adjacent qualifying cells collapse to the lexicographically smallest
/// (u, v). Result is sorted by descending value, ties by (u, v).
inline std::vector<GridCell> extract_peaks(const HeatMap& m,
                                           const PeakConfig& pc) {
  if (pc.neighborhood_radius < 1)
    throw std::invalid_argument("extract_peaks: radius must be >= 1");
  const GridConfig& cfg = m.config();
  const int r = pc.neighborhood_radius;
  const double global_max = m.max_value();
  const double threshold = pc.shrink(global_max);
  if (threshold > global_max + 1e-12)
    throw std::invalid_argument("extract_peaks: shrink(x) must be <= x");

  std::vector<char> qualifies(cfg.cell_count(), 0);
  for (int u = 1; u <= cfg.s_u; ++u) {
    for (int v = 1; v <= cfg.s_v; ++v) {
      const double val = m.at(u, v);
      if (!(val > 0.0) || val < threshold) continue;
      bool is_max = true;
      for (int du = -r; du <= r && is_max; ++du) {
        const int uu = u + du;
        if (uu < 1 || uu > cfg.s_u) continue;
        for (int dv = -r; dv <= r; ++dv) {
          const int vv = v + dv;
          if (vv < 1 || vv > cfg.s_v) continue;
          if (m.at(uu, vv) > val) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) qualifies[cell_index({u, v}, cfg)] = 1;
    }
  }

  // Collapse equal-valued 8-connected plateaus to their lex-smallest cell.
  std::vector<char> visited(cfg.cell_count(), 0);
  std::vector<GridCell> peaks;
  for (int u = 1; u <= cfg.s_u; ++u) {
    for (int v = 1; v <= cfg.s_v; ++v) {
      const size_t idx = cell_index({u, v}, cfg);
      if (!qualifies[idx] || visited[idx]) continue;
      const double val = m.at(u, v);
      GridCell rep{u, v};
      std::vector<GridCell> stack{{u, v}};
      visited[idx] = 1;
      while (!stack.empty()) {
        GridCell c = stack.back();
        stack.pop_back();
        rep = std::min(rep, c);
        for (int du = -1; du <= 1; ++du) {
          for (int dv = -1; dv <= 1; ++dv) {
            GridCell n{c.u + du, c.v + dv};
            if ((du == 0 && dv == 0) || !cell_in_range(n, cfg)) continue;
            const size_t nidx = cell_index(n, cfg);
            if (qualifies[nidx] && !visited[nidx] && m.at(n) == val) {
              visited[nidx] = 1;
              stack.push_back(n);
            }
          }
        }
      }
      peaks.push_back(rep);
    }
  }

  std::sort(peaks.begin(), peaks.end(), [&](GridCell a, GridCell b) {
    const double va = m.at(a), vb = m.at(b);
    if (va != vb) return va > vb;
    return a < b;
  });
  return peaks;
}

/// Heuristic detector: peaks of the mean gaze heat-map.
inline std::vector<GridCell> detect_cone(const GazeSequence& s,
                                         const PeakConfig& pc) {
  return extract_peaks(mean_gaze_map(s), pc);
}

/// Heuristic detector: peaks of the time-mean of per-frame cone
/// intersection maps.
inline std::vector<GridCell> detect_intersect(std::span<const Frame> frames,
                                              const GridConfig& cfg,
                                              double epsilon,
                                              const PeakConfig& pc) {
  return extract_peaks(mean_intersection_map(frames, cfg, epsilon), pc);
}

}  // namespace gazemap
