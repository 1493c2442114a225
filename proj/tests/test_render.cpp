#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "gazemap/grid.hpp"
#include "gazemap/render.hpp"

using namespace gazemap;

namespace {

// Independent cone oracle built on atan2 (the implementation uses a dot
// product and never calls atan2). Returns the angular margin of the sample
// closest to the aperture boundary via *margin, so callers can ignore
// disagreements caused by samples that graze the boundary.
bool cell_in_cone_oracle(int u, int v, const PersonState& p,
                         const GridConfig& g, double eps, double* margin) {
  const double w = g.cell_width(), h = g.cell_height();
  const double x0 = g.x_min + (u - 1) * w, y0 = g.y_min + (v - 1) * h;
  const double sx[5] = {x0 + 0.5 * w, x0, x0 + w, x0, x0 + w};
  const double sy[5] = {y0 + 0.5 * h, y0, y0, y0 + h, y0 + h};
  bool hit = false;
  *margin = 1e9;
  for (int i = 0; i < 5; ++i) {
    const double dx = sx[i] - p.position.x, dy = sy[i] - p.position.y;
    if (dx * dx + dy * dy < 1e-18) continue;
    if (eps >= kPi) {
      hit = true;
      continue;
    }
    const double delta = std::fabs(wrap_angle(std::atan2(dy, dx) - p.pan));
    *margin = std::min(*margin, std::fabs(delta - eps));
    if (delta < eps) hit = true;
  }
  return hit;
}

HeatMap cone_oracle(const PersonState& p, const GridConfig& g, double eps) {
  std::vector<double> vals(g.cell_count(), 0.0);
  double margin;
  for (int u = 1; u <= g.s_u; ++u)
    for (int v = 1; v <= g.s_v; ++v)
      vals[cell_index({u, v}, g)] =
          cell_in_cone_oracle(u, v, p, g, eps, &margin) ? 1.0 : 0.0;
  vals[cell_index(world_to_cell(p.position, g), g)] = 0.0;
  return HeatMap(g, std::move(vals), true);
}

constexpr double kEps2Deg = kPi / 90.0;

}  // namespace

TEST_CASE("render_cone matches the atan2 oracle on random states", "[render]") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> upos(0.05, 2.95), upan(-kPi, kPi);
  const GridConfig grids[] = {GridConfig{},
                              GridConfig{15, 9, -0.5, 2.5, 0.0, 2.0}};
  int checked_cells = 0;
  for (const GridConfig& g : grids) {
    for (int trial = 0; trial < 100; ++trial) {
      PersonState p{{upos(rng), upos(rng)}, wrap_angle(upan(rng))};
      const double eps = (trial % 3 == 0) ? kEps2Deg : (trial % 3 == 1 ? 0.3 : 1.2);
      HeatMap got = render_cone(p, g, eps);
      for (int u = 1; u <= g.s_u; ++u) {
        for (int v = 1; v <= g.s_v; ++v) {
          double margin;
          const bool want = cell_in_cone_oracle(u, v, p, g, eps, &margin);
          const bool own = world_to_cell(p.position, g) == GridCell{u, v};
          const double have = got.at(u, v);
          CHECK((have == 0.0 || have == 1.0));
          if (own) {
            CHECK(have == 0.0);
          } else if (margin > 1e-9) {  // skip samples grazing the aperture edge
            if (have != (want ? 1.0 : 0.0)) {
              CAPTURE(u, v, p.position.x, p.position.y, p.pan, eps, margin);
              CHECK(have == (want ? 1.0 : 0.0));
            }
            ++checked_cells;
          }
        }
      }
    }
  }
  CHECK(checked_cells > 100000);  // the skip clause must not eat the test
}

TEST_CASE("render_cone hand geometry on the default grid", "[render]") {
  GridConfig g;
  // person at the center of cell (1,1), looking along the main diagonal:
  // every diagonal cell center lies exactly on the cone axis
  PersonState p{cell_center({1, 1}, g), kPi / 4.0};
  HeatMap m = render_cone(p, g, kEps2Deg);
  for (int k = 2; k <= 32; ++k) CHECK(m.at(k, k) == 1.0);
  CHECK(m.at(1, 1) == 0.0);   // own cell
  CHECK(m.at(32, 1) == 0.0);  // ~45 degrees off-axis
  CHECK(m.at(1, 32) == 0.0);
  CHECK(m.at(16, 2) == 0.0);

  // full circle: everything except the viewer's cell
  HeatMap full = render_cone(p, g, kPi);
  for (int u = 1; u <= 32; ++u)
    for (int v = 1; v <= 32; ++v)
      CHECK(full.at(u, v) == ((u == 1 && v == 1) ? 0.0 : 1.0));
}

TEST_CASE("render_cone input validation", "[render]") {
  GridConfig g;
  PersonState p{{1.0, 1.0}, 0.0};
  CHECK_THROWS_AS(render_cone(p, g, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(render_cone(p, g, -0.1), std::invalid_argument);
  PersonState bad{{std::nan(""), 1.0}, 0.0};
  CHECK_THROWS_AS(render_cone(bad, g, kEps2Deg), std::invalid_argument);
  bad = {{1.0, 1.0}, std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(render_cone(bad, g, kEps2Deg), std::invalid_argument);
}

TEST_CASE("frame_gaze_map averages per-person cones", "[render]") {
  GridConfig g;
  Frame f;
  f.persons.push_back({{0.5, 1.5}, 0.0});
  f.persons.push_back({{2.5, 1.5}, kPi});
  HeatMap got = frame_gaze_map(f, g, 0.3);
  HeatMap a = render_cone(f.persons[0], g, 0.3);
  HeatMap b = render_cone(f.persons[1], g, 0.3);
  for (size_t i = 0; i < got.values().size(); ++i)
    CHECK(got.values()[i] ==
          Catch::Approx(0.5 * (a.values()[i] + b.values()[i])).margin(1e-15));
  // two opposed cones overlap between the viewers
  CHECK(got.max_value() == 1.0);

  Frame empty;
  HeatMap z = frame_gaze_map(empty, g, 0.3);
  CHECK(z.max_value() == 0.0);
  CHECK(z.min_value() == 0.0);
}

TEST_CASE("mean_gaze_map is the elementwise time mean", "[render]") {
  GridConfig g{4, 4, 0.0, 3.0, 0.0, 3.0};
  auto mk = [&](double fill, GridCell hot) {
    std::vector<double> v(16, fill);
    v[cell_index(hot, g)] = 1.0;
    return HeatMap(g, std::move(v), true);
  };
  GazeSequence s(g, {mk(0.0, {1, 1}), mk(0.5, {1, 1}), mk(0.25, {2, 3})});
  HeatMap m = mean_gaze_map(s);
  CHECK(m.at(1, 1) == Catch::Approx((1.0 + 1.0 + 0.25) / 3.0));
  CHECK(m.at(2, 3) == Catch::Approx((0.0 + 0.5 + 1.0) / 3.0));
  CHECK(m.at(4, 4) == Catch::Approx(0.25));
  CHECK(s.length() == 3);

  CHECK_THROWS_AS(GazeSequence(g, {}), std::invalid_argument);
  GridConfig other{5, 5, 0.0, 3.0, 0.0, 3.0};
  CHECK_THROWS_AS(GazeSequence(g, {mk(0.0, {1, 1}), HeatMap(other)}),
                  std::invalid_argument);
}

TEST_CASE("intersection_map marks cells covered by two or more cones",
          "[render]") {
  GridConfig g;
  const double eps = 0.25;
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> upos(0.3, 2.7), upan(-kPi, kPi);
  for (int trial = 0; trial < 30; ++trial) {
    Frame f;
    const int n = 1 + static_cast<int>(trial % 4);
    for (int i = 0; i < n; ++i)
      f.persons.push_back({{upos(rng), upos(rng)}, upan(rng)});
    HeatMap got = intersection_map(f, g, eps);
    // oracle: per-person maps via render_cone, count coverage
    std::vector<int> count(g.cell_count(), 0);
    for (const PersonState& p : f.persons) {
      HeatMap c = render_cone(p, g, eps);
      for (size_t i = 0; i < count.size(); ++i)
        count[i] += c.values()[i] > 0.5 ? 1 : 0;
    }
    for (size_t i = 0; i < count.size(); ++i)
      CHECK(got.values()[i] == (count[i] >= 2 ? 1.0 : 0.0));
  }

  // a single person can never intersect with itself
  Frame solo;
  solo.persons.push_back({{1.0, 1.0}, 0.3});
  CHECK(intersection_map(solo, g, eps).max_value() == 0.0);

  // two people staring at the same spot from different directions
  Frame pair;
  pair.persons.push_back({{0.5, 0.5}, std::atan2(1.0, 1.0)});
  pair.persons.push_back({{2.5, 0.5}, std::atan2(1.0, -1.0)});
  HeatMap x = intersection_map(pair, g, 0.1);
  CHECK(x.max_value() == 1.0);
  GridCell target = world_to_cell({1.5, 1.5}, g);
  CHECK(x.at(target) == 1.0);
}

TEST_CASE("mean_intersection_map averages per-frame intersections",
          "[render]") {
  GridConfig g;
  Frame pair;
  pair.persons.push_back({{0.5, 0.5}, std::atan2(1.0, 1.0)});
  pair.persons.push_back({{2.5, 0.5}, std::atan2(1.0, -1.0)});
  Frame solo;
  solo.persons.push_back({{1.0, 1.0}, 0.3});
  std::vector<Frame> frames{pair, solo};
  HeatMap m = mean_intersection_map(frames, g, 0.1);
  HeatMap a = intersection_map(pair, g, 0.1);
  for (size_t i = 0; i < m.values().size(); ++i)
    CHECK(m.values()[i] == Catch::Approx(0.5 * a.values()[i]).margin(1e-15));
  CHECK_THROWS_AS(mean_intersection_map({}, g, 0.1), std::invalid_argument);
}

TEST_CASE("object_heatmap is a max of unit Gaussians in cell units",
          "[render]") {
  GridConfig g;
  const double sigma = 1.5;

  std::vector<GridCell> one{{10, 10}};
  HeatMap m = object_heatmap(one, g, sigma);
  CHECK(m.at(10, 10) == 1.0);
  CHECK(m.at(11, 10) == Catch::Approx(0.80073740291680806).epsilon(1e-12));
  CHECK(m.at(10, 9) == Catch::Approx(0.80073740291680806).epsilon(1e-12));
  CHECK(m.at(11, 11) == Catch::Approx(0.64118038842995462).epsilon(1e-12));
  CHECK(m.at(13, 14) == Catch::Approx(0.0038659201394728076).epsilon(1e-12));

  // max, not sum: cell equidistant from two objects keeps the single-object value
  std::vector<GridCell> two{{10, 10}, {14, 10}};
  HeatMap m2 = object_heatmap(two, g, sigma);
  CHECK(m2.at(12, 10) == Catch::Approx(0.41111229050718745).epsilon(1e-12));
  CHECK(m2.at(10, 10) == 1.0);
  CHECK(m2.at(14, 10) == 1.0);

  // exactly M cells carry the value 1 when objects are distinct
  int ones = 0;
  for (double v : m2.values()) ones += v == 1.0 ? 1 : 0;
  CHECK(ones == 2);

  CHECK_THROWS_AS(object_heatmap(one, g, 0.0), std::invalid_argument);
  std::vector<GridCell> bad{{0, 5}};
  CHECK_THROWS_AS(object_heatmap(bad, g, sigma), std::invalid_argument);
  HeatMap none = object_heatmap({}, g, sigma);
  CHECK(none.max_value() == 0.0);
}

TEST_CASE("render_gaze_sequence renders one map per frame", "[render]") {
  GridConfig g;
  Frame a, b;
  a.persons.push_back({{1.0, 1.0}, 0.0});
  b.persons.push_back({{2.0, 2.0}, kPi / 2});
  std::vector<Frame> frames{a, b};
  GazeSequence s = render_gaze_sequence(frames, g, 0.3);
  REQUIRE(s.length() == 2);
  HeatMap ma = frame_gaze_map(a, g, 0.3);
  for (size_t i = 0; i < ma.values().size(); ++i)
    CHECK(s.maps()[0].values()[i] == ma.values()[i]);
  CHECK_THROWS_AS(render_gaze_sequence({}, g, 0.3), std::invalid_argument);
}
