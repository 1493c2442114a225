#pragma once

// The nine detectors: two training-free heuristics (cone mean,
// intersection), three dense baselines on the time-mean map, and four
// convolutional encoder/decoders, plus the Adam training loop and a
// scenario-pool evaluator.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gazemap/eval.hpp"
#include "gazemap/grid.hpp"
#include "gazemap/peaks.hpp"
#include "gazemap/render.hpp"
#include "gazemap/simgen.hpp"
#include "gazemap/tensor.hpp"

namespace gazemap {

enum class ModelKind {
  Cone,
  Intersect,
  LinearReg,
  FC1,
  FC3,
  Mean2DEnc,
  Enc2D,
  Enc3D,
  UNet3D2D
};

inline bool is_learned(ModelKind k) {
  return k != ModelKind::Cone && k != ModelKind::Intersect;
}

/// Convolutional kinds (the rest consume the time-mean map).
inline bool is_conv(ModelKind k) {
  return k == ModelKind::Mean2DEnc || k == ModelKind::Enc2D ||
         k == ModelKind::Enc3D || k == ModelKind::UNet3D2D;
}

/// Kinds whose input is the per-frame map stack rather than its time mean.
inline bool takes_sequence(ModelKind k) {
  return k == ModelKind::Enc2D || k == ModelKind::Enc3D ||
         k == ModelKind::UNet3D2D;
}

inline std::string_view kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::Cone: return "cone";
    case ModelKind::Intersect: return "intersect";
    case ModelKind::LinearReg: return "linear";
    case ModelKind::FC1: return "fc1";
    case ModelKind::FC3: return "fc3";
    case ModelKind::Mean2DEnc: return "mean2d";
    case ModelKind::Enc2D: return "enc2d";
    case ModelKind::Enc3D: return "enc3d";
    case ModelKind::UNet3D2D: return "unet";
  }
  throw std::invalid_argument("kind_name: unknown kind");
}

inline ModelKind kind_from_name(std::string_view name) {
  for (ModelKind k :
       {ModelKind::Cone, ModelKind::Intersect, ModelKind::LinearReg,
        ModelKind::FC1, ModelKind::FC3, ModelKind::Mean2DEnc, ModelKind::Enc2D,
        ModelKind::Enc3D, ModelKind::UNet3D2D})
    if (kind_name(k) == name) return k;
  throw std::invalid_argument("unknown model kind: " + std::string(name));
}

struct ModelSpec {
  ModelKind kind = ModelKind::UNet3D2D;
  GridConfig grid;
  int horizon = 20;  ///< T
  std::array<int, 3> channels{20, 40, 80};
  uint64_t seed = 0;

  void validate() const {
    grid.validate();
    if (horizon < 1) throw std::invalid_argument("ModelSpec: horizon must be >= 1");
    for (int c : channels)
      if (c < 1) throw std::invalid_argument("ModelSpec: channels must be >= 1");
    // three pool/upsample stages need both grid dims divisible by 8
    if (is_conv(kind) && (grid.s_u % 8 != 0 || grid.s_v % 8 != 0))
      throw std::invalid_argument(
          "ModelSpec: convolutional kinds need grid dims divisible by 8");
  }
};

struct TrainedModel {
  ModelSpec spec;
  /// Named parameters in declaration (checkpoint) order.
  std::vector<std::pair<std::string, nn::NodePtr>> params;
  std::vector<double> loss_log;  ///< mean batch loss per training step

  const nn::NodePtr& param(std::string_view name) const {
    for (const auto& [n, p] : params)
      if (n == name) return p;
    throw std::invalid_argument("unknown parameter: " + std::string(name));
  }
};

/// Output-layer bias init for the sigmoid heads. The target maps are sparse
/// (base rate ~4%), so starting the background near sigmoid(-3) ~ 0.047
/// instead of 0.5 lets short schedules spend their steps on the peaks
/// rather than on suppressing a uniformly wrong background.
inline constexpr double kHeadBiasInit = -3.0;

/// Fan-in-scaled uniform initialization: U(-1/sqrt(fan_in), 1/sqrt(fan_in))
/// for weights, zeros for biases except the sigmoid head (kHeadBiasInit);
/// deterministic in the spec seed.
inline TrainedModel build(const ModelSpec& spec) {
  spec.validate();
  TrainedModel m;
  m.spec = spec;
  if (!is_learned(spec.kind)) return m;

  Rng rng(spec.seed);
  auto weight = [&](const std::string& name, std::vector<int> shape) {
    int64_t fan_in = 1;
    for (size_t i = 1; i < shape.size(); ++i) fan_in *= shape[i];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    nn::Tensor t(std::move(shape));
    for (double& v : t.data) v = detail::uniform(rng, -bound, bound);
    m.params.emplace_back(name, nn::leaf(std::move(t), name));
  };
  auto bias = [&](const std::string& name, int n, double fill = 0.0) {
    nn::Tensor t({n});
    std::fill(t.data.begin(), t.data.end(), fill);
    m.params.emplace_back(name, nn::leaf(std::move(t), name));
  };

  const int s = static_cast<int>(spec.grid.cell_count());
  const auto [c1, c2, c3] = spec.channels;
  switch (spec.kind) {
    case ModelKind::LinearReg:
      weight("w0", {s, s});
      bias("b0", s);
      break;
    case ModelKind::FC1:
      weight("w0", {s, s});
      bias("b0", s);
      weight("w1", {s, s});
      bias("b1", s, kHeadBiasInit);
      break;
    case ModelKind::FC3:
      for (int i = 0; i < 4; ++i) {
        weight("w" + std::to_string(i), {s, s});
        bias("b" + std::to_string(i), s, i == 3 ? kHeadBiasInit : 0.0);
      }
      break;
    case ModelKind::Mean2DEnc:
    case ModelKind::Enc2D: {
      const int in_ch = spec.kind == ModelKind::Enc2D ? spec.horizon : 1;
      weight("enc1_w", {c1, in_ch, 3, 3});
      bias("enc1_b", c1);
      weight("enc2_w", {c2, c1, 3, 3});
      bias("enc2_b", c2);
      weight("enc3_w", {c3, c2, 3, 3});
      bias("enc3_b", c3);
      weight("dec1_w", {c2, c3, 3, 3});
      bias("dec1_b", c2);
      weight("dec2_w", {c1, c2, 3, 3});
      bias("dec2_b", c1);
      weight("dec3_w", {1, c1, 3, 3});
      bias("dec3_b", 1, kHeadBiasInit);
      break;
    }
    case ModelKind::Enc3D:
    case ModelKind::UNet3D2D: {
      const bool skips = spec.kind == ModelKind::UNet3D2D;
      weight("enc1_w", {c1, 1, 3, 3, 3});
      bias("enc1_b", c1);
      weight("enc2_w", {c2, c1, 3, 3, 3});
      bias("enc2_b", c2);
      weight("enc3_w", {c3, c2, 3, 3, 3});
      bias("enc3_b", c3);
      weight("dec1_w", {c2, skips ? 2 * c3 : c3, 3, 3});
      bias("dec1_b", c2);
      weight("dec2_w", {c1, skips ? 2 * c2 : c2, 3, 3});
      bias("dec2_b", c1);
      weight("dec3_w", {1, skips ? 2 * c1 : c1, 3, 3});
      bias("dec3_b", 1, kHeadBiasInit);
      break;
    }
    default:
      break;
  }
  return m;
}

namespace detail {

/// Shared decoder: three upsample+conv stages, optional per-stage skip
/// concatenation (deepest skip first), sigmoid on the last conv.
inline nn::NodePtr decode2d(const TrainedModel& m, nn::NodePtr h,
                            const std::array<nn::NodePtr, 3>* skips) {
  h = nn::upsample2d(h);
  if (skips) h = nn::concat_channels(h, (*skips)[2]);
  h = nn::relu(nn::conv2d(h, m.param("dec1_w"), m.param("dec1_b")));
  h = nn::upsample2d(h);
  if (skips) h = nn::concat_channels(h, (*skips)[1]);
  h = nn::relu(nn::conv2d(h, m.param("dec2_w"), m.param("dec2_b")));
  h = nn::upsample2d(h);
  if (skips) h = nn::concat_channels(h, (*skips)[0]);
  return nn::sigmoid(nn::conv2d(h, m.param("dec3_w"), m.param("dec3_b")));
}

}  // namespace detail

/// Builds the differentiable graph from an input leaf to the predicted map
/// ([S] for dense kinds, [1,H,W] for convolutional kinds). `zero_skips` is
/// a test hook that multiplies the skip tensors by zero.
inline nn::NodePtr forward(const TrainedModel& m, const nn::NodePtr& x,
                           bool zero_skips = false) {
  switch (m.spec.kind) {
    case ModelKind::LinearReg:
      return nn::dense(x, m.param("w0"), m.param("b0"));
    case ModelKind::FC1: {
      auto h = nn::relu(nn::dense(x, m.param("w0"), m.param("b0")));
      return nn::sigmoid(nn::dense(h, m.param("w1"), m.param("b1")));
    }
    case ModelKind::FC3: {
      auto h = x;
      for (int i = 0; i < 3; ++i)
        h = nn::relu(nn::dense(h, m.param("w" + std::to_string(i)),
                               m.param("b" + std::to_string(i))));
      return nn::sigmoid(nn::dense(h, m.param("w3"), m.param("b3")));
    }
    case ModelKind::Mean2DEnc:
    case ModelKind::Enc2D: {
      auto e1 = nn::relu(nn::conv2d(x, m.param("enc1_w"), m.param("enc1_b")));
      auto e2 = nn::relu(
          nn::conv2d(nn::maxpool2d(e1), m.param("enc2_w"), m.param("enc2_b")));
      auto e3 = nn::relu(
          nn::conv2d(nn::maxpool2d(e2), m.param("enc3_w"), m.param("enc3_b")));
      return detail::decode2d(m, nn::maxpool2d(e3), nullptr);
    }
    case ModelKind::Enc3D:
    case ModelKind::UNet3D2D: {
      auto e1 = nn::relu(nn::conv3d(x, m.param("enc1_w"), m.param("enc1_b")));
      auto e2 = nn::relu(
          nn::conv3d(nn::maxpool3d(e1), m.param("enc2_w"), m.param("enc2_b")));
      auto e3 = nn::relu(
          nn::conv3d(nn::maxpool3d(e2), m.param("enc3_w"), m.param("enc3_b")));
      auto bottleneck = nn::temporal_global_maxpool(nn::maxpool3d(e3));
      if (m.spec.kind == ModelKind::Enc3D)
        return detail::decode2d(m, bottleneck, nullptr);
      std::array<nn::NodePtr, 3> skips{nn::temporal_global_maxpool(e1),
                                       nn::temporal_global_maxpool(e2),
                                       nn::temporal_global_maxpool(e3)};
      if (zero_skips)
        for (nn::NodePtr& sk : skips) sk = nn::scale(sk, 0.0);
      return detail::decode2d(m, bottleneck, &skips);
    }
    default:
      throw std::invalid_argument("forward: heuristic kinds have no network");
  }
}

/// Shapes a rendered gaze sequence into the model's input tensor: the
/// time-mean map for dense kinds and Mean2DEnc (any T), the per-frame stack
/// for sequence kinds (T must equal the spec horizon).
inline nn::Tensor input_tensor(const ModelSpec& spec, const GazeSequence& seq) {
  if (!(seq.config() == spec.grid))
    throw std::invalid_argument("input_tensor: grid config mismatch");
  const int su = spec.grid.s_u, sv = spec.grid.s_v;
  const int s = su * sv;
  if (!takes_sequence(spec.kind)) {
    const HeatMap mean = mean_gaze_map(seq);
    if (spec.kind == ModelKind::Mean2DEnc)
      return nn::Tensor({1, su, sv}, mean.values());
    return nn::Tensor({s}, mean.values());
  }
  if (seq.length() != spec.horizon)
    throw std::invalid_argument("input_tensor: sequence length != horizon");
  std::vector<double> data;
  data.reserve(static_cast<size_t>(spec.horizon) * s);
  for (const HeatMap& f : seq.maps())
    data.insert(data.end(), f.values().begin(), f.values().end());
  if (spec.kind == ModelKind::Enc2D)
    return nn::Tensor({spec.horizon, su, sv}, std::move(data));
  return nn::Tensor({1, spec.horizon, su, sv}, std::move(data));
}

/// Ground-truth map shaped to match the forward output.
inline nn::Tensor target_tensor(const ModelSpec& spec, const HeatMap& omega) {
  if (!(omega.config() == spec.grid))
    throw std::invalid_argument("target_tensor: grid config mismatch");
  if (is_conv(spec.kind))
    return nn::Tensor({1, spec.grid.s_u, spec.grid.s_v}, omega.values());
  return nn::Tensor({static_cast<int>(spec.grid.cell_count())}, omega.values());
}

/// Inference to a normalized heat-map. LinearReg's raw output is min-max
/// rescaled to [0,1] (a constant raw output maps to all zeros); the other
/// learned kinds end in a sigmoid and need no rescale.
inline HeatMap predict(const TrainedModel& m, const GazeSequence& seq) {
  if (!is_learned(m.spec.kind))
    throw std::invalid_argument("predict: heuristic kinds produce no map");
  auto x = nn::leaf(input_tensor(m.spec, seq), "input");
  std::vector<double> v = forward(m, x)->value.data;
  if (m.spec.kind == ModelKind::LinearReg) {
    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    const double lo = *lo_it, range = *hi_it - *lo_it;
    if (range > 0.0)
      for (double& e : v) e = (e - lo) / range;
    else
      std::fill(v.begin(), v.end(), 0.0);
  }
  return HeatMap(m.spec.grid, std::move(v), /*normalized=*/true);
}

/// One rendered scenario as seen by every detector kind.
struct SampleInput {
  GazeSequence seq;
  std::vector<Frame> frames;
  double epsilon = kPi / 90.0;
};

inline SampleInput make_input(std::vector<Frame> frames, const GridConfig& grid,
                              double epsilon = kPi / 90.0) {
  GazeSequence seq = render_gaze_sequence(frames, grid, epsilon);
  return {std::move(seq), std::move(frames), epsilon};
}

/// Detected object cells: the heuristics run peak extraction on their own
/// maps, the learned kinds on the predicted map after min-max contrast
/// normalization and a square-root stretch. The peak threshold shrink(max)
/// is calibrated for accumulator-style intensity maps; regression outputs
/// compress their low end, so without the rescale a low-contrast map is held
/// to a proportionally stricter bar, and without the concave stretch a
/// probability-scaled map loses its secondary peaks to the threshold. Both
/// transforms are monotone and leave peak locations and ranking unchanged.
inline std::vector<GridCell> detect(const TrainedModel& m,
                                    const SampleInput& in,
                                    const PeakConfig& pc = {}) {
  switch (m.spec.kind) {
    case ModelKind::Cone:
      return detect_cone(in.seq, pc);
    case ModelKind::Intersect:
      return detect_intersect(in.frames, m.spec.grid, in.epsilon, pc);
    default: {
      const HeatMap p = predict(m, in.seq);
      std::vector<double> v = p.values();
      const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
      const double lo = *lo_it, range = *hi_it - *lo_it;
      if (range > 0.0)
        for (double& e : v) e = std::sqrt((e - lo) / range);
      else
        std::fill(v.begin(), v.end(), 0.0);
      return extract_peaks(HeatMap(m.spec.grid, std::move(v), true), pc);
    }
  }
}

// ---------------------------------------------------------------------------
// training

struct Sample {
  nn::Tensor input;
  nn::Tensor target;
};

using SampleSource = std::function<Sample()>;

struct TrainConfig {
  int steps = 200;
  int batch_size = 32;
  nn::AdamConfig adam{};
  /// Cosine lr decay floor as a fraction of adam.lr; 1.0 keeps the rate
  /// constant. Short schedules benefit from large early steps that carve the
  /// map structure and small late steps that refine the peaks.
  double lr_floor_frac = 0.05;
};

/// Scenario rendering shared by training and evaluation.
struct DataConfig {
  GenConfig gen;
  double epsilon = kPi / 90.0;
  double sigma_omega = 1.5;
};

inline Sample make_sample(const ModelSpec& spec, const Scenario& sc,
                          const DataConfig& dc) {
  GazeSequence seq = render_gaze_sequence(sc.frames, sc.grid, dc.epsilon);
  HeatMap omega = object_heatmap(sc.objects, sc.grid, dc.sigma_omega);
  return {input_tensor(spec, seq), target_tensor(spec, omega)};
}

/// Endless online source: scenario i of the stream is generated from
/// derive_seed(data_seed, i). Deterministic in data_seed.
inline SampleSource scenario_source(const ModelSpec& spec, const DataConfig& dc,
                                    uint64_t data_seed) {
  if (!(dc.gen.grid == spec.grid))
    throw std::invalid_argument("scenario_source: grid config mismatch");
  if (dc.gen.horizon != spec.horizon)
    throw std::invalid_argument("scenario_source: horizon mismatch");
  auto counter = std::make_shared<uint64_t>(0);
  return [spec, dc, data_seed, counter]() {
    return make_sample(spec, sample_scenario(dc.gen, data_seed, (*counter)++),
                       dc);
  };
}

/// Adam-trained model; the log records the mean batch loss every step.
/// Deterministic given (spec.seed, the source's seed).
inline TrainedModel train(const ModelSpec& spec, const SampleSource& next_sample,
                          const TrainConfig& tc) {
  if (!is_learned(spec.kind))
    throw std::invalid_argument("train: heuristic kinds are training-free");
  if (tc.steps < 1 || tc.batch_size < 1)
    throw std::invalid_argument("train: steps and batch_size must be >= 1");
  TrainedModel m = build(spec);
  std::vector<nn::NodePtr> params;
  params.reserve(m.params.size());
  for (const auto& [name, p] : m.params) params.push_back(p);
  nn::Adam opt(std::move(params), tc.adam);
  m.loss_log.reserve(tc.steps);
  for (int step = 0; step < tc.steps; ++step) {
    opt.zero_grad();
    double batch_loss = 0.0;
    for (int b = 0; b < tc.batch_size; ++b) {
      Sample s = next_sample();
      auto x = nn::leaf(std::move(s.input), "input");
      auto loss = nn::mse_loss(forward(m, x), s.target);
      batch_loss += loss->value.data[0];
      nn::backward(loss, 1.0 / tc.batch_size);
    }
    batch_loss /= tc.batch_size;
    if (!std::isfinite(batch_loss))
      throw std::runtime_error("train: non-finite loss at step " +
                               std::to_string(step));
    const double cosine =
        0.5 * (1.0 + std::cos(kPi * step / std::max(1, tc.steps - 1)));
    opt.set_lr(tc.adam.lr *
               (tc.lr_floor_frac + (1.0 - tc.lr_floor_frac) * cosine));
    opt.step();
    m.loss_log.push_back(batch_loss);
  }
  return m;
}

// ---------------------------------------------------------------------------
// evaluation over scenario pools

struct ModelEval {
  PRF1 prf;
  MatchCounts counts;
  std::vector<MatchCounts> per_scenario;
  double mse = 0.0;           ///< mean prediction MSE vs the true map (learned kinds)
  double all_zero_mse = 0.0;  ///< MSE of the all-zero predictor on the same pool
  int scenarios = 0;
};

/// Detection + matching over `n_scenarios` drawn from the evaluation
/// stream; the same stream seed always yields the same pool.
inline ModelEval evaluate_model(const TrainedModel& m, const DataConfig& dc,
                                int n_scenarios, uint64_t eval_seed,
                                const PeakConfig& pc = {},
                                double match_threshold_m = 0.5) {
  if (!(dc.gen.grid == m.spec.grid))
    throw std::invalid_argument("evaluate_model: grid config mismatch");
  ModelEval ev;
  ev.scenarios = n_scenarios;
  for (int i = 0; i < n_scenarios; ++i) {
    const Scenario sc = sample_scenario(dc.gen, eval_seed, i);
    const SampleInput in = make_input(sc.frames, sc.grid, dc.epsilon);
    const std::vector<GridCell> cells = detect(m, in, pc);
    ev.per_scenario.push_back(
        match_detections(cells, sc.objects, sc.grid, match_threshold_m)
            .counts());
    ev.counts += ev.per_scenario.back();
    const HeatMap omega = object_heatmap(sc.objects, sc.grid, dc.sigma_omega);
    double zero_acc = 0.0;
    for (double v : omega.values()) zero_acc += v * v;
    ev.all_zero_mse += zero_acc / static_cast<double>(omega.values().size());
    if (is_learned(m.spec.kind))
      ev.mse += heatmap_mse(predict(m, in.seq), omega);
  }
  if (n_scenarios > 0) {
    ev.mse /= n_scenarios;
    ev.all_zero_mse /= n_scenarios;
  }
  ev.prf = prf1(ev.counts);
  return ev;
}

}  // namespace gazemap
