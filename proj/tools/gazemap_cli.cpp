// Command-line front end: scenario generation, heat-map rendering, model
// training, detection, evaluation, and the f1-vs-T sweep. Every run writes
// a manifest (resolved config + seeds + tool version) beside its outputs so
// any table is regenerable from the manifest alone.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <gazemap/gazemap.hpp>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gazemap;

namespace {

constexpr std::string_view kToolVersion = "1.0.0";

struct Range {
  int lo = 0, hi = 0;
};

Range parse_range(const std::string& text, const std::string& flag) {
  Range r;
  const auto colon = text.find(':');
  try {
    if (colon == std::string::npos) {
      r.lo = r.hi = std::stoi(text);
    } else {
      r.lo = std::stoi(text.substr(0, colon));
      r.hi = std::stoi(text.substr(colon + 1));
    }
  } catch (const std::exception&) {
    throw CLI::ValidationError(flag, "expected an integer or lo:hi range");
  }
  if (r.lo > r.hi || r.lo < 0)
    throw CLI::ValidationError(flag, "invalid range " + text);
  return r;
}

/// Everything needed to reconstruct a GenConfig + rendering parameters,
/// shared by the generating subcommands.
struct GenFlags {
  int s_u = 32, s_v = 32;
  double x_min = 0.0, x_max = 3.0, y_min = 0.0, y_max = 3.0;
  std::string people = "3";
  std::string objects = "3";
  int horizon = 20;
  int camera_u = 3, camera_v = 3;
  double p_stay = 0.95;
  double step_sigma = 0.3;
  double speed = 0.1;
  double mean_hold = 5.0;
  double head_blend = 0.7;
  double relax_rate = 0.5;
  double pan_noise_deg = 10.0;
  double epsilon_deg = 2.0;
  double sigma_omega = 1.5;
};

void attach_gen_flags(CLI::App* cmd, GenFlags& f) {
  cmd->add_option("--grid-u", f.s_u, "Grid cells along x")->capture_default_str();
  cmd->add_option("--grid-v", f.s_v, "Grid cells along y")->capture_default_str();
  cmd->add_option("--x-min", f.x_min)->capture_default_str();
  cmd->add_option("--x-max", f.x_max)->capture_default_str();
  cmd->add_option("--y-min", f.y_min)->capture_default_str();
  cmd->add_option("--y-max", f.y_max)->capture_default_str();
  cmd->add_option("--people,-n", f.people, "Person count (int or lo:hi range)")
      ->capture_default_str();
  cmd->add_option("--objects,-m", f.objects, "Object count (int or lo:hi range)")
      ->capture_default_str();
  cmd->add_option("--horizon,-t", f.horizon, "Frames per scenario (T)")
      ->capture_default_str();
  cmd->add_option("--camera-u", f.camera_u, "Camera cell u")->capture_default_str();
  cmd->add_option("--camera-v", f.camera_v, "Camera cell v")->capture_default_str();
  cmd->add_option("--p-stay", f.p_stay)->capture_default_str();
  cmd->add_option("--step-sigma", f.step_sigma)->capture_default_str();
  cmd->add_option("--speed", f.speed, "Meters per frame")->capture_default_str();
  cmd->add_option("--mean-hold", f.mean_hold, "Mean attention hold, frames")
      ->capture_default_str();
  cmd->add_option("--head-blend", f.head_blend)->capture_default_str();
  cmd->add_option("--relax-rate", f.relax_rate)->capture_default_str();
  cmd->add_option("--pan-noise-deg", f.pan_noise_deg)->capture_default_str();
  cmd->add_option("--epsilon-deg", f.epsilon_deg, "Gaze cone half-aperture")
      ->capture_default_str();
  cmd->add_option("--sigma-omega", f.sigma_omega, "Object map std, cells")
      ->capture_default_str();
}

GridConfig to_grid(const GenFlags& f) {
  GridConfig g{f.s_u, f.s_v, f.x_min, f.x_max, f.y_min, f.y_max};
  g.validate();
  return g;
}

GenConfig to_gen_config(const GenFlags& f, int n_people, int n_objects) {
  GenConfig gc;
  gc.grid = to_grid(f);
  gc.n_people = n_people;
  gc.n_objects = n_objects;
  gc.horizon = f.horizon;
  gc.camera_cell = {f.camera_u, f.camera_v};
  gc.p_stay = f.p_stay;
  gc.step_sigma = f.step_sigma;
  gc.speed_m_per_frame = f.speed;
  gc.mean_hold_frames = f.mean_hold;
  gc.head_blend = f.head_blend;
  gc.relax_rate = f.relax_rate;
  gc.pan_noise_sigma = f.pan_noise_deg * kPi / 180.0;
  gc.validate();
  return gc;
}

double to_epsilon(const GenFlags& f) { return f.epsilon_deg * kPi / 180.0; }

json gen_flags_json(const GenFlags& f) {
  return json{{"grid_u", f.s_u},
              {"grid_v", f.s_v},
              {"x_min", f.x_min},
              {"x_max", f.x_max},
              {"y_min", f.y_min},
              {"y_max", f.y_max},
              {"people", f.people},
              {"objects", f.objects},
              {"horizon", f.horizon},
              {"camera_u", f.camera_u},
              {"camera_v", f.camera_v},
              {"p_stay", f.p_stay},
              {"step_sigma", f.step_sigma},
              {"speed", f.speed},
              {"mean_hold", f.mean_hold},
              {"head_blend", f.head_blend},
              {"relax_rate", f.relax_rate},
              {"pan_noise_deg", f.pan_noise_deg},
              {"epsilon_deg", f.epsilon_deg},
              {"sigma_omega", f.sigma_omega}};
}

void write_manifest(const fs::path& dir, const std::string& command,
                    json config) {
  json m{{"tool", "gazemap"},
         {"version", std::string(kToolVersion)},
         {"command", command},
         {"config", std::move(config)}};
  std::ofstream out(dir / "manifest.json");
  out << m.dump(2) << "\n";
  if (!out)
    throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
}

/// Scenario `index` of the pool described by the flags; person/object
/// ranges are resolved per index from the same stream seed.
Scenario pool_scenario(const GenFlags& f, const Range& people,
                       const Range& objects, uint64_t seed, uint64_t index) {
  int n = people.lo, m = objects.lo;
  if (people.hi > people.lo || objects.hi > objects.lo) {
    Rng rng(derive_seed(seed ^ 0x5ca1ab1eULL, index));
    n = people.lo +
        static_cast<int>(rng() % static_cast<uint64_t>(people.hi - people.lo + 1));
    m = objects.lo +
        static_cast<int>(rng() % static_cast<uint64_t>(objects.hi - objects.lo + 1));
  }
  return sample_scenario(to_gen_config(f, n, m), seed, index);
}

std::string scenario_filename(uint64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scenario_%05llu.txt",
                static_cast<unsigned long long>(index));
  return buf;
}

// ---------------------------------------------------------------------------

int run_generate(const GenFlags& f, const fs::path& out_dir, int count,
                 uint64_t seed) {
  const Range people = parse_range(f.people, "--people");
  const Range objects = parse_range(f.objects, "--objects");
  fs::create_directories(out_dir);
  for (int i = 0; i < count; ++i) {
    const Scenario sc = pool_scenario(f, people, objects, seed, i);
    write_scenario(out_dir / scenario_filename(i), sc);
  }
  json cfg = gen_flags_json(f);
  cfg["count"] = count;
  cfg["seed"] = seed;
  write_manifest(out_dir, "generate", cfg);
  std::cout << "wrote " << count << " scenarios to " << out_dir.string() << "\n";
  return 0;
}

int run_render(const fs::path& scenario_path, const fs::path& out_dir,
               double epsilon_deg, double sigma_omega, bool raw) {
  const Scenario sc = read_scenario(scenario_path);
  const double epsilon = epsilon_deg * kPi / 180.0;
  fs::create_directories(out_dir);
  const GazeSequence seq = render_gaze_sequence(sc.frames, sc.grid, epsilon);
  char name[48];
  for (int t = 0; t < seq.length(); ++t) {
    std::snprintf(name, sizeof name, "gaze_%03d.pgm", t);
    write_heatmap_pgm(out_dir / name, seq.maps()[t]);
  }
  const HeatMap mean = mean_gaze_map(seq);
  const HeatMap omega = object_heatmap(sc.objects, sc.grid, sigma_omega);
  write_heatmap_pgm(out_dir / "mean.pgm", mean);
  write_heatmap_pgm(out_dir / "omega.pgm", omega);
  if (raw) {
    write_heatmap(out_dir / "mean.heatmap", mean);
    write_heatmap(out_dir / "omega.heatmap", omega);
  }
  write_manifest(out_dir, "render",
                 json{{"scenario", scenario_path.string()},
                      {"epsilon_deg", epsilon_deg},
                      {"sigma_omega", sigma_omega},
                      {"raw", raw}});
  std::cout << "rendered " << seq.length() << " frames to " << out_dir.string()
            << "\n";
  return 0;
}

int run_train(const GenFlags& f, const std::string& kind_str,
              const fs::path& out_dir, uint64_t model_seed, uint64_t data_seed,
              int steps, int batch, double lr) {
  const ModelKind kind = kind_from_name(kind_str);
  if (!is_learned(kind))
    throw CLI::ValidationError("--model", kind_str + " is training-free");
  const Range people = parse_range(f.people, "--people");
  const Range objects = parse_range(f.objects, "--objects");
  if (people.lo != people.hi || objects.lo != objects.hi)
    throw CLI::ValidationError("--people/--objects",
                               "training streams need fixed counts");

  ModelSpec spec{kind, to_grid(f), f.horizon, {20, 40, 80}, model_seed};
  DataConfig dc{to_gen_config(f, people.lo, objects.lo), to_epsilon(f),
                f.sigma_omega};
  TrainConfig tc;
  tc.steps = steps;
  tc.batch_size = batch;
  tc.adam.lr = lr;

  fs::create_directories(out_dir);
  const TrainedModel m = train(spec, scenario_source(spec, dc, data_seed), tc);
  save_model(out_dir / "model.ckpt", m);
  {
    std::ofstream log(out_dir / "loss_log.txt");
    log << "step loss\n";
    for (size_t i = 0; i < m.loss_log.size(); ++i)
      log << i << ' ' << m.loss_log[i] << '\n';
  }
  json cfg = gen_flags_json(f);
  cfg["model"] = kind_str;
  cfg["model_seed"] = model_seed;
  cfg["data_seed"] = data_seed;
  cfg["steps"] = steps;
  cfg["batch_size"] = batch;
  cfg["lr"] = lr;
  write_manifest(out_dir, "train", cfg);
  std::cout << "final loss " << m.loss_log.back() << ", checkpoint at "
            << (out_dir / "model.ckpt").string() << "\n";
  return 0;
}

/// Heuristic kind name or checkpoint path -> ready-to-run model.
TrainedModel resolve_model(const std::string& entry, const GridConfig& grid,
                           int horizon) {
  if (fs::exists(entry)) return load_model(entry);
  const ModelKind kind = kind_from_name(entry);
  if (is_learned(kind))
    throw CLI::ValidationError(
        "--models", entry + " is a learned kind; pass a checkpoint path");
  return build({kind, grid, horizon, {20, 40, 80}, 0});
}

int run_detect(const std::string& model_entry, const fs::path& scenario_path,
               const fs::path& tracks_path, const fs::path& out_path,
               double epsilon_deg, int peak_radius, int horizon_flag) {
  const double epsilon = epsilon_deg * kPi / 180.0;
  PeakConfig pc;
  pc.neighborhood_radius = peak_radius;

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw std::runtime_error("cannot write " + out_path.string());
    out = &file;
  }

  auto emit = [&](const std::string& tag, const std::vector<GridCell>& cells) {
    *out << tag;
    for (const GridCell& c : cells) *out << ' ' << c.u << ',' << c.v;
    *out << '\n';
  };

  if (!scenario_path.empty()) {
    const Scenario sc = read_scenario(scenario_path);
    const TrainedModel m =
        resolve_model(model_entry, sc.grid, static_cast<int>(sc.frames.size()));
    emit("detections:",
         detect(m, make_input(sc.frames, sc.grid, epsilon), pc));
  } else {
    const TrackData td = read_tracks(tracks_path);
    const auto windows = slice_windows(td.frames, horizon_flag);
    if (windows.empty())
      throw std::runtime_error("track file shorter than one window");
    const TrainedModel m =
        resolve_model(model_entry, td.header.grid, horizon_flag);
    for (size_t w = 0; w < windows.size(); ++w)
      emit("window " + std::to_string(w) + ":",
           detect(m, make_input(windows[w], td.header.grid, epsilon), pc));
  }
  return 0;
}

int run_evaluate(const GenFlags& f, const std::vector<std::string>& model_entries,
                 const std::string& method, const fs::path& out_dir, int count,
                 uint64_t eval_seed, const std::string& dataset_tag,
                 int peak_radius) {
  const Range people = parse_range(f.people, "--people");
  const Range objects = parse_range(f.objects, "--objects");
  PeakConfig pc;
  pc.neighborhood_radius = peak_radius;
  const double epsilon = to_epsilon(f);
  const GridConfig grid = to_grid(f);
  fs::create_directories(out_dir);

  // the test pool is generated once and reused for every model
  std::vector<Scenario> pool;
  pool.reserve(count);
  for (int i = 0; i < count; ++i)
    pool.push_back(pool_scenario(f, people, objects, eval_seed, i));

  std::vector<MetricsRow> rows;
  auto score = [&](const std::string& method_name, auto&& detect_fn,
                   auto&& mse_fn) {
    MetricsRow row;
    row.method = method_name;
    row.dataset = dataset_tag;
    row.n_sequences = count;
    row.seed = eval_seed;
    double mse_acc = 0.0;
    for (const Scenario& sc : pool) {
      const std::vector<GridCell> cells = detect_fn(sc);
      row.counts += match_detections(cells, sc.objects, sc.grid).counts();
      mse_acc += mse_fn(sc);
    }
    row.prf = prf1(row.counts);
    row.mse = count > 0 ? mse_acc / count : 0.0;
    rows.push_back(row);
    std::printf("%-12s f1 %6.2f  precision %6.2f  recall %6.2f  mse*100 %.4f\n",
                method_name.c_str(), 100.0 * row.prf.f1,
                100.0 * row.prf.precision, 100.0 * row.prf.recall,
                100.0 * row.mse);
  };

  if (method == "gt-peaks") {
    score(
        "gt-peaks",
        [&](const Scenario& sc) {
          return extract_peaks(object_heatmap(sc.objects, sc.grid, f.sigma_omega),
                               pc);
        },
        [&](const Scenario&) { return 0.0; });
  } else {
    for (const std::string& entry : model_entries) {
      const TrainedModel m = resolve_model(entry, grid, f.horizon);
      score(
          std::string(kind_name(m.spec.kind)),
          [&](const Scenario& sc) {
            return detect(m, make_input(sc.frames, sc.grid, epsilon), pc);
          },
          [&](const Scenario& sc) {
            if (!is_learned(m.spec.kind)) return 0.0;
            const SampleInput in = make_input(sc.frames, sc.grid, epsilon);
            return heatmap_mse(predict(m, in.seq),
                               object_heatmap(sc.objects, sc.grid, f.sigma_omega));
          });
    }
  }

  write_metrics(out_dir / "metrics.csv", rows);
  json cfg = gen_flags_json(f);
  cfg["models"] = model_entries;
  cfg["method"] = method;
  cfg["count"] = count;
  cfg["eval_seed"] = eval_seed;
  cfg["dataset"] = dataset_tag;
  cfg["peak_radius"] = peak_radius;
  write_manifest(out_dir, "evaluate", cfg);
  std::cout << "metrics written to " << (out_dir / "metrics.csv").string()
            << "\n";
  return 0;
}

int run_bench_t(const GenFlags& f, const std::vector<int>& t_list,
                const std::vector<std::string>& kinds, int n_seeds,
                const fs::path& out_dir, int steps, int batch, int eval_count,
                uint64_t base_seed) {
  const Range people = parse_range(f.people, "--people");
  const Range objects = parse_range(f.objects, "--objects");
  if (people.lo != people.hi || objects.lo != objects.hi)
    throw CLI::ValidationError("--people/--objects",
                               "training streams need fixed counts");
  fs::create_directories(out_dir);
  std::ofstream csv(out_dir / "bench.csv");
  csv << "method,T,seed,f1,precision,recall,mse_x100\n";

  for (const std::string& kind_str : kinds) {
    const ModelKind kind = kind_from_name(kind_str);
    for (int t : t_list) {
      GenFlags ft = f;
      ft.horizon = t;
      double f1_sum = 0.0;
      for (int s = 0; s < n_seeds; ++s) {
        const uint64_t model_seed = derive_seed(base_seed, 2 * s);
        const uint64_t data_seed = derive_seed(base_seed, 2 * s + 1);
        ModelSpec spec{kind, to_grid(ft), t, {20, 40, 80}, model_seed};
        DataConfig dc{to_gen_config(ft, people.lo, objects.lo), to_epsilon(ft),
                      ft.sigma_omega};
        TrainConfig tc;
        tc.steps = steps;
        tc.batch_size = batch;
        TrainedModel m;
        if (is_learned(kind))
          m = train(spec, scenario_source(spec, dc, data_seed), tc);
        else
          m = build(spec);
        const ModelEval ev =
            evaluate_model(m, dc, eval_count, derive_seed(base_seed, 1000));
        csv << kind_str << ',' << t << ',' << s << ',' << 100.0 * ev.prf.f1
            << ',' << 100.0 * ev.prf.precision << ',' << 100.0 * ev.prf.recall
            << ',' << 100.0 * ev.mse << '\n';
        f1_sum += ev.prf.f1;
        std::printf("%-8s T=%-3d seed %d: f1 %6.2f\n", kind_str.c_str(), t, s,
                    100.0 * ev.prf.f1);
      }
      std::printf("%-8s T=%-3d mean f1 %6.2f over %d seeds\n", kind_str.c_str(),
                  t, 100.0 * f1_sum / n_seeds, n_seeds);
    }
  }
  csv.close();
  json cfg = gen_flags_json(f);
  cfg["t_list"] = t_list;
  cfg["models"] = kinds;
  cfg["seeds"] = n_seeds;
  cfg["steps"] = steps;
  cfg["batch_size"] = batch;
  cfg["eval_count"] = eval_count;
  cfg["seed"] = base_seed;
  write_manifest(out_dir, "bench-T", cfg);
  std::cout << "bench table written to " << (out_dir / "bench.csv").string()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
#if defined(__GLIBC__)
  // Training long horizons allocates multi-megabyte activation tensors per
  // graph node; past malloc's default mmap threshold each costs an
  // mmap/munmap round trip. Keep them on the reusable heap.
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 256 << 20);
#endif
  CLI::App app{"Extended gaze following: top-view object discovery from head pans"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from an INI/TOML config file");

  GenFlags gen_f, train_f, eval_f, bench_f;
  fs::path out_dir = "out";
  int count = 10;
  uint64_t seed = 0;

  auto* cmd_gen = app.add_subcommand("generate", "Sample scenarios to files");
  attach_gen_flags(cmd_gen, gen_f);
  cmd_gen->add_option("--out,-o", out_dir, "Output directory")->capture_default_str();
  cmd_gen->add_option("--count,-k", count, "Scenario count")->capture_default_str();
  cmd_gen->add_option("--seed,-s", seed, "Stream seed")->capture_default_str();

  fs::path render_scenario, render_out = "render";
  double render_eps = 2.0, render_sigma = 1.5;
  bool render_raw = false;
  auto* cmd_render =
      app.add_subcommand("render", "Scenario file to heat-map images");
  cmd_render->add_option("--scenario", render_scenario, "Scenario file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_render->add_option("--out,-o", render_out)->capture_default_str();
  cmd_render->add_option("--epsilon-deg", render_eps)->capture_default_str();
  cmd_render->add_option("--sigma-omega", render_sigma)->capture_default_str();
  cmd_render->add_flag("--raw", render_raw, "Also write lossless heat-maps");

  std::string train_kind = "unet";
  fs::path train_out = "trained";
  uint64_t train_model_seed = 0, train_data_seed = 0;
  int train_steps = 200, train_batch = 32;
  double train_lr = 1e-3;
  auto* cmd_train = app.add_subcommand("train", "Train a detector checkpoint");
  attach_gen_flags(cmd_train, train_f);
  cmd_train->add_option("--model", train_kind, "linear|fc1|fc3|mean2d|enc2d|enc3d|unet")
      ->capture_default_str();
  cmd_train->add_option("--out,-o", train_out)->capture_default_str();
  cmd_train->add_option("--seed,-s", train_model_seed, "Init seed")
      ->capture_default_str();
  cmd_train->add_option("--data-seed", train_data_seed, "Scenario stream seed")
      ->capture_default_str();
  cmd_train->add_option("--steps", train_steps)->capture_default_str();
  cmd_train->add_option("--batch", train_batch)->capture_default_str();
  cmd_train->add_option("--lr", train_lr)->capture_default_str();

  std::string detect_model = "cone";
  fs::path detect_scenario, detect_tracks, detect_out;
  double detect_eps = 2.0;
  int detect_radius = 2, detect_horizon = 20;
  auto* cmd_detect =
      app.add_subcommand("detect", "Detected cells for one scenario or track file");
  cmd_detect->add_option("--model", detect_model,
                         "Heuristic kind or checkpoint path")
      ->capture_default_str();
  auto* so = cmd_detect->add_option("--scenario", detect_scenario, "Scenario file")
                 ->check(CLI::ExistingFile);
  auto* to = cmd_detect->add_option("--tracks", detect_tracks, "Track file")
                 ->check(CLI::ExistingFile);
  so->excludes(to);
  cmd_detect->add_option("--out,-o", detect_out, "Write detections to a file");
  cmd_detect->add_option("--epsilon-deg", detect_eps)->capture_default_str();
  cmd_detect->add_option("--peak-radius", detect_radius)->capture_default_str();
  cmd_detect->add_option("--horizon,-t", detect_horizon,
                         "Window length for track files")
      ->capture_default_str();

  std::vector<std::string> eval_models{"cone", "intersect"};
  std::string eval_method = "model", eval_tag = "synthetic";
  fs::path eval_out = "eval";
  int eval_count = 100, eval_radius = 2;
  uint64_t eval_seed = 1;
  auto* cmd_eval = app.add_subcommand("evaluate", "Score models on a seeded pool");
  attach_gen_flags(cmd_eval, eval_f);
  cmd_eval->add_option("--models", eval_models,
                       "Heuristic kinds and/or checkpoint paths")
      ->delimiter(',');
  cmd_eval->add_option("--method", eval_method, "model|gt-peaks")
      ->check(CLI::IsMember({"model", "gt-peaks"}))
      ->capture_default_str();
  cmd_eval->add_option("--out,-o", eval_out)->capture_default_str();
  cmd_eval->add_option("--count,-k", eval_count, "Test scenarios")
      ->capture_default_str();
  cmd_eval->add_option("--seed,-s", eval_seed, "Pool seed")->capture_default_str();
  cmd_eval->add_option("--dataset", eval_tag, "Dataset tag for the table")
      ->capture_default_str();
  cmd_eval->add_option("--peak-radius", eval_radius)->capture_default_str();

  std::vector<int> bench_ts{10, 20, 40};
  std::vector<std::string> bench_models{"unet"};
  fs::path bench_out = "bench";
  int bench_seeds = 3, bench_steps = 200, bench_batch = 32, bench_count = 100;
  uint64_t bench_seed = 0;
  auto* cmd_bench =
      app.add_subcommand("bench-T", "Re-train over a list of T, emit f1-vs-T");
  attach_gen_flags(cmd_bench, bench_f);
  cmd_bench->add_option("--t-list", bench_ts, "Sequence lengths")->delimiter(',');
  cmd_bench->add_option("--models", bench_models)->delimiter(',');
  cmd_bench->add_option("--seeds", bench_seeds, "Training seeds per point")
      ->capture_default_str();
  cmd_bench->add_option("--out,-o", bench_out)->capture_default_str();
  cmd_bench->add_option("--steps", bench_steps)->capture_default_str();
  cmd_bench->add_option("--batch", bench_batch)->capture_default_str();
  cmd_bench->add_option("--count,-k", bench_count, "Test scenarios per point")
      ->capture_default_str();
  cmd_bench->add_option("--seed,-s", bench_seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_gen->parsed()) return run_generate(gen_f, out_dir, count, seed);
    if (cmd_render->parsed())
      return run_render(render_scenario, render_out, render_eps, render_sigma,
                        render_raw);
    if (cmd_train->parsed())
      return run_train(train_f, train_kind, train_out, train_model_seed,
                       train_data_seed, train_steps, train_batch, train_lr);
    if (cmd_detect->parsed()) {
      if (detect_scenario.empty() && detect_tracks.empty())
        throw CLI::ValidationError("detect", "need --scenario or --tracks");
      return run_detect(detect_model, detect_scenario, detect_tracks,
                        detect_out, detect_eps, detect_radius, detect_horizon);
    }
    if (cmd_eval->parsed())
      return run_evaluate(eval_f, eval_models, eval_method, eval_out,
                          eval_count, eval_seed, eval_tag, eval_radius);
    if (cmd_bench->parsed())
      return run_bench_t(bench_f, bench_ts, bench_models, bench_seeds,
                         bench_out, bench_steps, bench_batch, bench_count,
                         bench_seed);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
