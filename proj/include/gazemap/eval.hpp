#pragma once

// Detection scoring: minimum-cost assignment between detected cells and
// ground-truth object cells, a world-distance match threshold, and
// micro-averaged precision / recall / F1 over scenario collections.

#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "gazemap/grid.hpp"

namespace gazemap {

/// Minimum-cost assignment (Kuhn-Munkres with potentials, O(n^2 m)).
/// Entries must be finite. Returns the assigned column per row; when there
/// are more rows than columns the unassigned rows get -1.
inline std::vector<int> hungarian(
    const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  if (n == 0) return {};
  const int m = static_cast<int>(cost[0].size());
  for (const auto& row : cost)
    if (static_cast<int>(row.size()) != m)
      throw std::invalid_argument("hungarian: ragged cost matrix");
  if (m == 0) return std::vector<int>(n, -1);

  if (n > m) {  // transpose so every row of the reduced problem is matched
    std::vector<std::vector<double>> t(m, std::vector<double>(n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) t[j][i] = cost[i][j];
    const std::vector<int> col_to_row = hungarian(t);
    std::vector<int> row_to_col(n, -1);
    for (int j = 0; j < m; ++j)
      if (col_to_row[j] >= 0) row_to_col[col_to_row[j]] = j;
    return row_to_col;
  }

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = inf;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j)
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

struct MatchCounts {
  long long tp = 0, fp = 0, fn = 0;
  MatchCounts& operator+=(const MatchCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

struct MatchResult {
  struct Pair {
    int detection = 0;
    int object = 0;
    double distance_m = 0.0;
  };
  std::vector<Pair> pairs;  ///< successful matches, distance <= threshold
  std::vector<int> unmatched_detections;
  std::vector<int> unmatched_objects;

  MatchCounts counts() const {
    return {static_cast<long long>(pairs.size()),
            static_cast<long long>(unmatched_detections.size()),
            static_cast<long long>(unmatched_objects.size())};
  }
};

/// Assigns detections to objects by minimum total world distance between
/// cell centers, then demotes assigned pairs farther apart than
/// `threshold_m` to one unmatched detection plus one unmatched object.
inline MatchResult match_detections(std::span<const GridCell> detections,
                                    std::span<const GridCell> objects,
                                    const GridConfig& grid,
                                    double threshold_m = 0.5) {
  const int nd = static_cast<int>(detections.size());
  const int no = static_cast<int>(objects.size());
  MatchResult r;
  if (nd == 0 || no == 0) {
    for (int i = 0; i < nd; ++i) r.unmatched_detections.push_back(i);
    for (int j = 0; j < no; ++j) r.unmatched_objects.push_back(j);
    return r;
  }

  // Square matrix padded with a flat constant: padding rows/columns cost the
  // same wherever they land, so they cannot distort the real sub-assignment.
  const int k = std::max(nd, no);
  const double pad = 1e6;
  std::vector<std::vector<double>> cost(k, std::vector<double>(k, pad));
  for (int i = 0; i < nd; ++i)
    for (int j = 0; j < no; ++j)
      cost[i][j] = cell_distance_m(detections[i], objects[j], grid);

  const std::vector<int> assign = hungarian(cost);
  std::vector<char> object_matched(no, 0);
  for (int i = 0; i < nd; ++i) {
    const int j = assign[i];
    if (j >= 0 && j < no && cost[i][j] <= threshold_m) {
      r.pairs.push_back({i, j, cost[i][j]});
      object_matched[j] = 1;
    } else {
      r.unmatched_detections.push_back(i);
    }
  }
  for (int j = 0; j < no; ++j)
    if (!object_matched[j]) r.unmatched_objects.push_back(j);
  return r;
}

struct PRF1 {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

/// Precision is 0 with no detections, recall is 0 with no objects, and F1
/// is 0 when precision + recall is 0.
inline PRF1 prf1(const MatchCounts& c) {
  PRF1 r;
  if (c.tp + c.fp > 0) r.precision = static_cast<double>(c.tp) / (c.tp + c.fp);
  if (c.tp + c.fn > 0) r.recall = static_cast<double>(c.tp) / (c.tp + c.fn);
  if (r.precision + r.recall > 0.0)
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

/// Micro average: counts are pooled over scenarios before computing ratios.
inline PRF1 micro_average(std::span<const MatchCounts> counts) {
  MatchCounts pooled;
  for (const MatchCounts& c : counts) pooled += c;
  return prf1(pooled);
}

/// Mean squared difference between two maps on the same grid.
inline double heatmap_mse(const HeatMap& a, const HeatMap& b) {
  if (!(a.config() == b.config()))
    throw std::invalid_argument("heatmap_mse: grid config mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < a.values().size(); ++i) {
    const double d = a.values()[i] - b.values()[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.values().size());
}

}  // namespace gazemap
