// Acceptance gate for the full pipeline. Each criterion prints exactly one
// line on stdout — "criterion N: PASS (...)" or "criterion N: FAIL (...)" —
// and the process exits 0 or 1. Progress for the long criteria goes to
// stderr. Criterion 6 trains the desk-scale detectors and caches the
// convolutional checkpoints under acceptance_cache/ so criterion 7 can
// score them without retraining; criterion 7 trains its own single seed
// when the cache is absent.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gazemap/gazemap.hpp>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace fs = std::filesystem;
using namespace gazemap;
using nn::NodePtr;
using nn::Tensor;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_s(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void progress(const std::string& msg) {
  std::cerr << "  .. " << msg << std::endl;
}

std::string fmt(double v, int prec = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

struct Outcome {
  bool ok = true;
  std::string detail;
};

// ---------------------------------------------------------------------------
// criterion 1: the reference results table is internally consistent — every
// row's f1 equals 2pr/(p+r) of its own precision/recall to within 0.15pp

struct RefRow {
  const char* dataset;
  const char* method;
  double p, r, f1;  // percent
};

constexpr RefRow kReferenceRows[] = {
    {"synthetic", "cone", 18.8, 53.9, 27.8},
    {"synthetic", "intersect", 21.1, 35.0, 26.3},
    {"synthetic", "linear", 50.5, 76.9, 60.9},
    {"synthetic", "fc1", 64.9, 61.5, 63.1},
    {"synthetic", "fc3", 65.9, 59.9, 62.8},
    {"synthetic", "mean2d", 74.5, 59.5, 66.1},
    {"synthetic", "enc2d", 76.8, 62.2, 68.7},
    {"synthetic", "enc3d", 88.2, 71.4, 78.9},
    {"synthetic", "unet", 89.0, 78.0, 83.2},
    {"vernissage", "cone", 20.7, 35.8, 26.2},
    {"vernissage", "intersect", 34.9, 27.2, 30.6},
    {"vernissage", "linear", 37.0, 53.7, 43.7},
    {"vernissage", "fc1", 29.9, 35.2, 32.3},
    {"vernissage", "fc3", 28.0, 29.9, 28.8},
    {"vernissage", "mean2d", 60.1, 41.1, 48.8},
    {"vernissage", "enc2d", 54.9, 40.5, 46.6},
    {"vernissage", "enc3d", 49.9, 37.1, 42.5},
    {"vernissage", "unet", 45.1, 38.5, 41.5},
};

Outcome criterion1() {
  double worst = 0.0;
  const RefRow* at = &kReferenceRows[0];
  int rows = 0;
  for (const RefRow& r : kReferenceRows) {
    ++rows;
    const double f1 = r.p + r.r > 0.0 ? 2.0 * r.p * r.r / (r.p + r.r) : 0.0;
    const double err = std::abs(f1 - r.f1);
    if (err > worst) {
      worst = err;
      at = &r;
    }
  }
  std::ostringstream d;
  d << rows << " rows, worst |f1 - 2pr/(p+r)| = " << fmt(worst, 4) << "pp ("
    << at->dataset << "/" << at->method << ")";
  return {worst <= 0.15, d.str()};
}

// ---------------------------------------------------------------------------
// criterion 2: reverse-mode gradients of every operation and every learned
// architecture (16x16 grid, T=4) agree with central differences to 1e-4

constexpr std::array<ModelKind, 7> kLearnedKinds{
    ModelKind::LinearReg, ModelKind::FC1,   ModelKind::FC3,
    ModelKind::Mean2DEnc, ModelKind::Enc2D, ModelKind::Enc3D,
    ModelKind::UNet3D2D};

Tensor rand_tensor(std::mt19937_64& rng, std::vector<int> shape,
                   double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> d(lo, hi);
  for (double& x : t.data) x = d(rng);
  return t;
}

struct GradCase {
  std::string name;
  std::vector<NodePtr> leaves;
  std::function<NodePtr()> rebuild;
  long long coords = -1;  ///< per-leaf probe cap; -1 checks every coordinate
  bool big = false;       ///< big graphs cannot satisfy a global kink gate
};

/// Scalarizes an arbitrary output by mse against an all-zero target of the
/// same shape.
std::function<NodePtr()> against_zero(std::function<NodePtr()> out) {
  return [out = std::move(out)] {
    NodePtr y = out();
    return nn::mse_loss(y, Tensor(y->value.shape));
  };
}

std::vector<GradCase> op_cases(std::mt19937_64& rng) {
  std::vector<GradCase> cs;
  auto L = [](Tensor t, const char* n) { return nn::leaf(std::move(t), n); };
  auto add_case = [&](const char* name, std::vector<NodePtr> leaves,
                      std::function<NodePtr()> out) {
    cs.push_back(
        {name, std::move(leaves), against_zero(std::move(out)), -1, false});
  };

  {
    NodePtr a = L(rand_tensor(rng, {3, 4}), "a");
    NodePtr b = L(rand_tensor(rng, {3, 4}), "b");
    add_case("add", {a, b}, [a, b] { return nn::add(a, b); });
  }
  {
    NodePtr a = L(rand_tensor(rng, {2, 5}), "a");
    add_case("scale", {a}, [a] { return nn::scale(a, -1.7); });
  }
  {
    NodePtr a = L(rand_tensor(rng, {2, 5, 5}), "a");
    add_case("relu", {a}, [a] { return nn::relu(a); });
  }
  {
    NodePtr a = L(rand_tensor(rng, {7}), "a");
    add_case("sigmoid", {a}, [a] { return nn::sigmoid(a); });
  }
  {
    NodePtr a = L(rand_tensor(rng, {2, 6}), "a");
    add_case("reshape", {a}, [a] { return nn::reshape(a, {3, 4}); });
  }
  {
    NodePtr a = L(rand_tensor(rng, {3, 4}), "a");
    NodePtr b = L(rand_tensor(rng, {4, 2}), "b");
    add_case("matmul", {a, b}, [a, b] { return nn::matmul(a, b); });
  }
  {
    NodePtr x = L(rand_tensor(rng, {6}), "x");
    NodePtr w = L(rand_tensor(rng, {4, 6}), "w");
    NodePtr b = L(rand_tensor(rng, {4}), "b");
    add_case("dense", {x, w, b}, [x, w, b] { return nn::dense(x, w, b); });
  }
  {
    NodePtr x = L(rand_tensor(rng, {2, 6, 6}), "x");
    NodePtr w = L(rand_tensor(rng, {3, 2, 3, 3}), "w");
    NodePtr b = L(rand_tensor(rng, {3}), "b");
    add_case("conv2d", {x, w, b}, [x, w, b] { return nn::conv2d(x, w, b); });
  }
  {
    NodePtr x = L(rand_tensor(rng, {2, 4, 5, 5}), "x");
    NodePtr w = L(rand_tensor(rng, {3, 2, 3, 3, 3}), "w");
    NodePtr b = L(rand_tensor(rng, {3}), "b");
    add_case("conv3d", {x, w, b}, [x, w, b] { return nn::conv3d(x, w, b); });
  }
  {
    NodePtr x = L(rand_tensor(rng, {2, 5, 5}), "x");  // odd dims: clamping
    add_case("maxpool2d", {x}, [x] { return nn::maxpool2d(x); });
  }
  {
    NodePtr x = L(rand_tensor(rng, {2, 5, 6, 6}), "x");  // odd T: ceiling
    add_case("maxpool3d", {x}, [x] { return nn::maxpool3d(x, 2); });
  }
  {
    NodePtr x = L(rand_tensor(rng, {3, 4, 4, 4}), "x");
    add_case("temporal_global_maxpool", {x},
             [x] { return nn::temporal_global_maxpool(x); });
  }
  {
    NodePtr x = L(rand_tensor(rng, {2, 3, 3}), "x");
    add_case("upsample2d", {x}, [x] { return nn::upsample2d(x); });
  }
  {
    NodePtr a = L(rand_tensor(rng, {2, 4, 4}), "a");
    NodePtr b = L(rand_tensor(rng, {3, 4, 4}), "b");
    add_case("concat_channels", {a, b},
             [a, b] { return nn::concat_channels(a, b); });
  }
  {
    NodePtr x = L(rand_tensor(rng, {3, 3}), "x");
    Tensor tgt = rand_tensor(rng, {3, 3});
    cs.push_back({"mse_loss",
                  {x},
                  [x, tgt] { return nn::mse_loss(x, tgt); },
                  -1,
                  false});
  }
  {
    // the ops composed the way the encoders use them
    NodePtr x = L(rand_tensor(rng, {1, 4, 8, 8}), "x");
    NodePtr w1 = L(rand_tensor(rng, {3, 1, 3, 3, 3}, -0.4, 0.4), "w1");
    NodePtr b1 = L(rand_tensor(rng, {3}, -0.2, 0.2), "b1");
    NodePtr w2 = L(rand_tensor(rng, {2, 6, 3, 3}, -0.4, 0.4), "w2");
    NodePtr b2 = L(rand_tensor(rng, {2}, -0.2, 0.2), "b2");
    cs.push_back({"composed",
                  {x, w1, b1, w2, b2},
                  against_zero([=] {
                    NodePtr e = nn::relu(nn::conv3d(x, w1, b1));
                    NodePtr t = nn::temporal_global_maxpool(nn::maxpool3d(e, 2));
                    NodePtr u = nn::upsample2d(t);
                    NodePtr c = nn::concat_channels(u, nn::sigmoid(u));
                    return nn::conv2d(c, w2, b2);
                  }),
                  -1, false});
  }
  return cs;
}

Tensor arch_input(const ModelSpec& s, std::mt19937_64& rng) {
  switch (s.kind) {
    case ModelKind::Mean2DEnc:
      return rand_tensor(rng, {1, s.grid.s_u, s.grid.s_v}, 0.0, 1.0);
    case ModelKind::Enc2D:
      return rand_tensor(rng, {s.horizon, s.grid.s_u, s.grid.s_v}, 0.0, 1.0);
    case ModelKind::Enc3D:
    case ModelKind::UNet3D2D:
      return rand_tensor(rng, {1, s.horizon, s.grid.s_u, s.grid.s_v}, 0.0,
                         1.0);
    default:
      return rand_tensor(rng, {s.grid.cell_count()}, 0.0, 1.0);
  }
}

std::vector<GradCase> arch_cases(std::mt19937_64& rng) {
  std::vector<GradCase> cs;
  for (ModelKind k : kLearnedKinds) {
    ModelSpec s;
    s.kind = k;
    s.grid = GridConfig{16, 16, 0.0, 3.0, 0.0, 3.0};
    s.horizon = 4;
    s.channels = {6, 8, 10};
    s.seed = 17 + static_cast<uint64_t>(static_cast<int>(k));
    auto m = std::make_shared<TrainedModel>(build(s));
    // The zero-bias init point is structurally kinked: relu-dead windows
    // make downstream preactivations exactly equal to their (zero) bias, so
    // the loss is non-differentiable right at the evaluation point and
    // central differences converge to the subgradient average. Jitter every
    // parameter off that point before probing.
    std::uniform_real_distribution<double> jit(-0.05, 0.05);
    for (auto& [name, p] : m->params)
      for (double& v : p->value.data) v += jit(rng);
    NodePtr x = nn::leaf(arch_input(s, rng), "input");
    std::vector<NodePtr> leaves{x};
    for (auto& [name, p] : m->params) leaves.push_back(p);
    cs.push_back({std::string(kind_name(k)), std::move(leaves),
                  against_zero([m, x] { return forward(*m, x); }),
                  /*coords=*/24, /*big=*/true});
  }
  return cs;
}

Outcome criterion2() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::vector<GradCase> cases = op_cases(rng);
  for (GradCase& c : arch_cases(rng)) cases.push_back(std::move(c));

  double worst_ok = 0.0;
  std::string worst_name = "-";
  for (GradCase& c : cases) {
    bool passed = false;
    nn::GradCheckReport rep;
    for (int attempt = 0; attempt < 8 && !passed; ++attempt) {
      if (attempt > 0) {
        // fresh sample: new input for the architectures (their parameters
        // keep the build initialization), new everything for the op graphs
        std::uniform_real_distribution<double> d(c.big ? 0.0 : -1.0, 1.0);
        for (const NodePtr& l :
             c.big ? std::vector<NodePtr>{c.leaves[0]} : c.leaves)
          for (double& v : l->value.data) v = d(rng);
      }
      // small graphs can always be sampled clear of every relu/pool kink
      if (!c.big && nn::min_kink_gap(c.rebuild()) < 1e-3) continue;
      rep = nn::grad_check(c.rebuild, c.leaves, c.coords, 900 + attempt);
      passed = rep.max_rel_err < 1e-4 && rep.checked > 0;
      if (!passed && c.big) {
        // a probe that stepped across a kink almost never crosses again at
        // h/8; a genuinely wrong gradient fails at any step size
        rep = nn::grad_check(c.rebuild, c.leaves, c.coords, 900 + attempt,
                             1.25e-6);
        passed = rep.max_rel_err < 1e-4 && rep.checked > 0;
      }
    }
    if (!passed) {
      std::ostringstream d;
      d << c.name << ": rel err " << rep.max_rel_err << " at " << rep.worst_leaf
        << " (analytic " << rep.worst_analytic << ", numeric "
        << rep.worst_numeric << ")";
      return {false, d.str()};
    }
    progress(c.name + " ok, rel err " + fmt(rep.max_rel_err, 10));
    if (rep.max_rel_err > worst_ok) {
      worst_ok = rep.max_rel_err;
      worst_name = c.name;
    }
  }
  std::ostringstream d;
  d << cases.size() << " graphs (16 op fixtures + 7 architectures at 16x16 "
    << "T=4), worst rel err " << fmt(worst_ok, 8) << " (" << worst_name
    << "), " << fmt(elapsed_s(t0), 1) << "s";
  return {true, d.str()};
}

// ---------------------------------------------------------------------------
// criterion 3: the assignment solver matches exhaustive search on 500
// random cost matrices up to 6x6

double assignment_total(const std::vector<std::vector<double>>& cost,
                        const std::vector<int>& a) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] >= 0) s += cost[i][static_cast<size_t>(a[i])];
  return s;
}

double brute_force_total(const std::vector<std::vector<double>>& cost) {
  const size_t n = cost.size(), m = cost[0].size();
  if (n > m) {
    std::vector<std::vector<double>> t(m, std::vector<double>(n));
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < m; ++j) t[j][i] = cost[i][j];
    return brute_force_total(t);
  }
  std::vector<size_t> cols(m);
  std::iota(cols.begin(), cols.end(), size_t{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += cost[i][cols[i]];
    best = std::min(best, s);
  } while (std::next_permutation(cols.begin(), cols.end()));
  return best;
}

Outcome criterion3() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(3333);
  std::uniform_real_distribution<double> val(-5.0, 5.0);
  double max_gap = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const size_t n = 1 + rng() % 6, m = 1 + rng() % 6;
    std::vector<std::vector<double>> cost(n, std::vector<double>(m));
    for (auto& row : cost)
      for (double& c : row)
        c = trial % 2 ? std::floor(val(rng)) : val(rng);  // odd trials: ties
    const std::vector<int> a = hungarian(cost);
    if (a.size() != n)
      return {false, "assignment has wrong length on trial " +
                         std::to_string(trial)};
    size_t assigned = 0;
    std::vector<bool> used(m, false);
    for (int col : a) {
      if (col < 0) continue;
      if (col >= static_cast<int>(m) || used[static_cast<size_t>(col)])
        return {false, "invalid column in trial " + std::to_string(trial)};
      used[static_cast<size_t>(col)] = true;
      ++assigned;
    }
    if (assigned != std::min(n, m))
      return {false, "not a maximum assignment in trial " +
                         std::to_string(trial)};
    const double gap =
        std::abs(assignment_total(cost, a) - brute_force_total(cost));
    max_gap = std::max(max_gap, gap);
    if (gap > 1e-9) {
      std::ostringstream d;
      d << "suboptimal on trial " << trial << " (" << n << "x" << m
        << "), cost gap " << gap;
      return {false, d.str()};
    }
  }
  std::ostringstream d;
  d << "500 random matrices up to 6x6 (half with integer ties), max cost "
    << "gap " << max_gap << ", " << fmt(elapsed_s(t0), 2) << "s";
  return {true, d.str()};
}

// ---------------------------------------------------------------------------
// criterion 4: peaks of the ground-truth object map recover the objects of
// 100 generated scenarios with perfect precision and recall at 50 cm

Outcome criterion4() {
  const auto t0 = Clock::now();
  GenConfig gc;  // defaults: 32x32 grid, 3 objects, 2 people, T=20
  MatchCounts total;
  for (int i = 0; i < 100; ++i) {
    const Scenario sc = sample_scenario(gc, 4040, i);
    const std::vector<GridCell> peaks =
        extract_peaks(object_heatmap(sc.objects, sc.grid, 1.5), PeakConfig{});
    total += match_detections(peaks, sc.objects, sc.grid).counts();
  }
  const PRF1 p = prf1(total);
  std::ostringstream d;
  d << "100 scenarios, 300 objects: precision " << fmt(100.0 * p.precision, 2)
    << ", recall " << fmt(100.0 * p.recall, 2) << " (tp " << total.tp
    << ", fp " << total.fp << ", fn " << total.fn << "), "
    << fmt(elapsed_s(t0), 1) << "s";
  return {total.tp == 300 && total.fp == 0 && total.fn == 0, d.str()};
}

// ---------------------------------------------------------------------------
// criterion 5: 1000 sampled scenarios satisfy every generator invariant and
// regenerate bit-identically from their stream position

bool scenarios_identical(const Scenario& a, const Scenario& b) {
  if (!(a.grid == b.grid) || a.seed != b.seed ||
      !(a.camera_cell == b.camera_cell) || a.objects != b.objects ||
      a.frames.size() != b.frames.size() ||
      a.latent_targets.size() != b.latent_targets.size())
    return false;
  for (size_t t = 0; t < a.frames.size(); ++t) {
    const auto& pa = a.frames[t].persons;
    const auto& pb = b.frames[t].persons;
    if (pa.size() != pb.size()) return false;
    for (size_t i = 0; i < pa.size(); ++i)
      if (pa[i].position.x != pb[i].position.x ||
          pa[i].position.y != pb[i].position.y || pa[i].pan != pb[i].pan)
        return false;
  }
  for (size_t n = 0; n < a.latent_targets.size(); ++n) {
    if (a.latent_targets[n].size() != b.latent_targets[n].size()) return false;
    for (size_t t = 0; t < a.latent_targets[n].size(); ++t) {
      const AttentionTarget& x = a.latent_targets[n][t];
      const AttentionTarget& y = b.latent_targets[n][t];
      if (x.kind != y.kind || x.index != y.index ||
          x.wander_dir != y.wander_dir)
        return false;
    }
  }
  return true;
}

Outcome criterion5() {
  const auto t0 = Clock::now();
  GenConfig gc;
  int reproduced = 0;
  for (int i = 0; i < 1000; ++i) {
    Scenario s;
    try {
      s = sample_scenario(gc, 42, i);
      validate_scenario(s, gc);
    } catch (const std::exception& e) {
      return {false,
              "scenario " + std::to_string(i) + " invalid: " + e.what()};
    }
    if (i % 10 == 0) {
      if (!scenarios_identical(s, sample_scenario(gc, 42, i)))
        return {false,
                "scenario " + std::to_string(i) + " not bit-reproducible"};
      ++reproduced;
    }
  }
  std::ostringstream d;
  d << "1000 scenarios pass all invariants, " << reproduced
    << " regenerated bit-identically, " << fmt(elapsed_s(t0), 1) << "s";
  return {true, d.str()};
}

// ---------------------------------------------------------------------------
// desk-scale training shared by criteria 6-8

constexpr int kDeskEval = 500;
constexpr int kDeskSeeds = 3;
constexpr uint64_t kEvalSeed = 0xE7A1;
const fs::path kCacheDir = "acceptance_cache";

DataConfig desk_config(int horizon) {
  DataConfig dc;
  dc.gen.horizon = horizon;
  return dc;
}

ModelSpec desk_spec(ModelKind k, int horizon, uint64_t seed) {
  ModelSpec s;  // grid and channel widths stay at the library defaults
  s.kind = k;
  s.horizon = horizon;
  s.seed = seed;
  return s;
}

TrainedModel train_desk(ModelKind k, int horizon, int seed_idx) {
  const uint64_t tag =
      (static_cast<uint64_t>(static_cast<int>(k)) * 64 + horizon) * 8 +
      static_cast<uint64_t>(seed_idx);
  const ModelSpec spec = desk_spec(k, horizon, derive_seed(0xA11CE, tag));
  const TrainConfig tc;  // 200 steps of batch 32, Adam at 1e-3, cosine decay
  return train(spec, scenario_source(spec, desk_config(horizon),
                                     derive_seed(0xDA7A, tag)),
               tc);
}

Outcome criterion6() {
  const auto t0 = Clock::now();
  const DataConfig dc = desk_config(20);

  double best_heur = 0.0;
  for (ModelKind k : {ModelKind::Cone, ModelKind::Intersect}) {
    const TrainedModel m = build(desk_spec(k, 20, 0));
    const double f1 = evaluate_model(m, dc, kDeskEval, kEvalSeed).prf.f1;
    progress(std::string(kind_name(k)) + " f1 " + fmt(100.0 * f1));
    best_heur = std::max(best_heur, f1);
  }

  std::map<ModelKind, double> mean_f1;
  for (ModelKind k : kLearnedKinds) {
    double acc = 0.0;
    for (int s = 0; s < kDeskSeeds; ++s) {
      const TrainedModel m = train_desk(k, 20, s);
      const double f1 = evaluate_model(m, dc, kDeskEval, kEvalSeed).prf.f1;
      acc += f1;
      progress(std::string(kind_name(k)) + " seed " + std::to_string(s) +
               " f1 " + fmt(100.0 * f1) + " (" + fmt(elapsed_s(t0), 0) + "s)");
      if (s == 0 && is_conv(k)) {
        fs::create_directories(kCacheDir);
        save_model(kCacheDir / (std::string(kind_name(k)) + ".ckpt"), m);
      }
    }
    mean_f1[k] = acc / kDeskSeeds;
  }

  double min_margin = std::numeric_limits<double>::infinity();
  ModelKind margin_at = ModelKind::LinearReg;
  for (const auto& [k, f1] : mean_f1)
    if (f1 - best_heur < min_margin) {
      min_margin = f1 - best_heur;
      margin_at = k;
    }
  const double m2l =
      mean_f1[ModelKind::Mean2DEnc] - mean_f1[ModelKind::LinearReg];
  const double u2m =
      mean_f1[ModelKind::UNet3D2D] - mean_f1[ModelKind::Mean2DEnc];
  const bool ok = min_margin >= 0.10 && m2l >= 0.0 && u2m >= 0.03;

  std::ostringstream d;
  d << "best heuristic f1 " << fmt(100.0 * best_heur) << "; min learned "
    << "margin " << fmt(100.0 * min_margin) << "pp (" << kind_name(margin_at)
    << ", need >= 10); mean2d-linear " << fmt(100.0 * m2l)
    << "pp (need >= 0); unet-mean2d " << fmt(100.0 * u2m)
    << "pp (need >= 3); " << fmt(elapsed_s(t0), 0) << "s";
  return {ok, d.str()};
}

Outcome criterion7() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::ostringstream d;
  for (ModelKind k : {ModelKind::Mean2DEnc, ModelKind::Enc2D, ModelKind::Enc3D,
                      ModelKind::UNet3D2D}) {
    const fs::path ckpt = kCacheDir / (std::string(kind_name(k)) + ".ckpt");
    TrainedModel m;
    if (fs::exists(ckpt)) {
      progress(std::string(kind_name(k)) + ": using cached checkpoint");
      m = load_model(ckpt);
    } else {
      progress(std::string(kind_name(k)) + ": no cache, training one seed");
      m = train_desk(k, 20, 0);
      fs::create_directories(kCacheDir);
      save_model(ckpt, m);
    }
    const ModelEval ev = evaluate_model(m, desk_config(20), kDeskEval,
                                        kEvalSeed);
    const bool beats = ev.mse < ev.all_zero_mse;
    ok = ok && beats;
    d << kind_name(k) << " mse*100 " << fmt(100.0 * ev.mse, 3)
      << (beats ? " < " : " !< ") << fmt(100.0 * ev.all_zero_mse, 3)
      << " (all-zero); ";
  }
  d << fmt(elapsed_s(t0), 0) << "s";
  return {ok, d.str()};
}

Outcome criterion8() {
  const auto t0 = Clock::now();
  const int eval_n = 300;
  auto mean_f1_at = [&](int horizon) {
    double acc = 0.0;
    for (int s = 0; s < kDeskSeeds; ++s) {
      const TrainedModel m = train_desk(ModelKind::UNet3D2D, horizon, s);
      const double f1 =
          evaluate_model(m, desk_config(horizon), eval_n, kEvalSeed).prf.f1;
      progress("unet T=" + std::to_string(horizon) + " seed " +
               std::to_string(s) + " f1 " + fmt(100.0 * f1) + " (" +
               fmt(elapsed_s(t0), 0) + "s)");
      acc += f1;
    }
    return acc / kDeskSeeds;
  };
  const double f1_10 = mean_f1_at(10);
  const double f1_40 = mean_f1_at(40);
  std::ostringstream d;
  d << "unet mean f1 over " << kDeskSeeds << " seeds: T=10 "
    << fmt(100.0 * f1_10) << ", T=40 " << fmt(100.0 * f1_40)
    << " (allowed drop 2pp); " << fmt(elapsed_s(t0), 0) << "s";
  return {f1_40 >= f1_10 - 0.02, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
#if defined(__GLIBC__)
  // Long-horizon training allocates multi-megabyte activation tensors every
  // node; above malloc's default mmap threshold each one costs an
  // mmap/munmap round trip, which at T=40 turns into minutes of system
  // time. Serve them from the reusable heap instead.
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 256 << 20);
#endif
  int criterion = 0;
  for (int i = 1; i < argc; ++i)
    if (!std::strcmp(argv[i], "--criterion") && i + 1 < argc)
      criterion = std::atoi(argv[++i]);
  if (criterion < 1 || criterion > 8) {
    std::cerr << "usage: acceptance --criterion <1..8>\n";
    return 2;
  }

  const std::map<int, std::function<Outcome()>> runners{
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4},
      {5, criterion5}, {6, criterion6}, {7, criterion7}, {8, criterion8}};
  const std::map<int, double> budget_s{{1, 60.0},   {2, 120.0}, {3, 10.0},
                                       {4, 30.0},   {5, 60.0},  {6, 2700.0},
                                       {7, 1200.0}, {8, 1800.0}};

  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = runners.at(criterion)();
  } catch (const std::exception& e) {
    o = {false, std::string("unhandled exception: ") + e.what()};
  }
  const double el = elapsed_s(t0);
  if (o.ok && el > budget_s.at(criterion)) {
    o.ok = false;
    o.detail += " [runtime " + fmt(el, 0) + "s exceeds the " +
                fmt(budget_s.at(criterion), 0) + "s budget]";
  }
  std::printf("criterion %d: %s (%s)\n", criterion, o.ok ? "PASS" : "FAIL",
              o.detail.c_str());
  return o.ok ? 0 : 1;
}
