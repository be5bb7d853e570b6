// Acceptance suite: one PASS/FAIL line per criterion on stdout, progress on stderr.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <set>

#include "amc/amc.hpp"
#include "gradcheck_suite.hpp"
#include "oracles.hpp"

using namespace amc;
using namespace amc::harness;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---- 1: renderer vs brute force ---------------------------------------------

Outcome renderer_oracle()
{
  const auto t0 = Clock::now();
  DatasetConfig d;
  d.symbols_per_frame = 1000;
  const int sizes[] = {25, 50, 100, 200};
  const double snrs[] = {-20, -5, 10, 30};
  double worst = 0.0;
  int clouds = 0;
  for (int i = 0; i < 104; ++i) {
    const auto f = signal::all_formats[i % 8];
    const double snr = snrs[(i / 8) % 4];
    const auto frame = synthesize_frame(d, f, snr, static_cast<std::uint64_t>(i));
    const render::RenderConfig rc{sizes[i % 4], 0.5, render::default_extent(signal::all_formats)};
    const auto fast = render::render_raw(frame.points, rc);
    const auto ref = oracle::render_raw(frame.points.points, rc.image_size, rc.extent, rc.decay_mu);
    for (std::size_t k = 0; k < fast.size(); ++k) worst = std::max(worst, std::abs(fast[k] - ref[k]));
    ++clouds;
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && secs < 60.0,
          std::to_string(clouds) + " clouds, max abs diff " + fmt("%.3g", worst) + ", " + fmt("%.1f", secs) + " s"};
}

// ---- 2: SNR calibration -------------------------------------------------------

Outcome snr_calibration()
{
  const auto t0 = Clock::now();
  const signal::PulseShape shape;
  const auto prof = channel::ChannelProfile::pedestrian_a();
  const auto sym = signal::draw_symbols(signal::ModulationFormat::QAM16, 125000, 5);
  const auto faded = channel::apply_multipath(signal::pulse_shape(sym, shape), channel::draw_channel(prof, 6), prof);
  double worst = 0.0;
  for (int snr = -20; snr <= 30; snr += 5) {
    const auto noisy = channel::add_awgn(faded, {static_cast<double>(snr)}, 100 + static_cast<std::uint64_t>(snr + 20));
    worst = std::max(worst, std::abs(channel::measure_snr(faded, noisy) - snr));
  }
  const double secs = seconds_since(t0);
  return {worst <= 0.1 && faded.samples.size() >= 1000000 && secs < 300.0,
          std::to_string(faded.samples.size()) + " samples/frame, worst |error| " + fmt("%.4f", worst) + " dB, " +
              fmt("%.1f", secs) + " s"};
}

// ---- 3: channel tap powers ----------------------------------------------------

Outcome tap_powers()
{
  const auto t0 = Clock::now();
  const auto prof = channel::ChannelProfile::pedestrian_a();
  const int draws = 100000;
  std::vector<double> sum(prof.path_count(), 0.0);
  for (int i = 0; i < draws; ++i) {
    const auto ch = channel::draw_channel(prof, mix_seed(77, static_cast<std::uint64_t>(i)));
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += std::norm(ch.taps[k]);
  }
  const double target_db[] = {0.0, -9.7, -19.2, -22.8};
  double worst = 0.0;
  std::string detail;
  for (std::size_t k = 0; k < sum.size(); ++k) {
    const double target = std::pow(10.0, target_db[k] / 10.0);
    const double rel = std::abs(sum[k] / draws - target) / target;
    worst = std::max(worst, rel);
    detail += fmt("%.2f dB ", 10.0 * std::log10(sum[k] / draws));
  }
  const double secs = seconds_since(t0);
  return {worst <= 0.03 && secs < 60.0,
          "measured " + detail + "worst rel " + fmt("%.4f", worst) + ", " + fmt("%.1f", secs) + " s"};
}

// ---- 4: gradients -------------------------------------------------------------

Outcome gradients()
{
  const auto t0 = Clock::now();
  double layer_worst = 0.0, graph_worst = 0.0;
  std::string worst_name;
  for (const auto& r : gradcheck::all_layers()) layer_worst = std::max(layer_worst, r.error);
  const auto graph = gradcheck::fifnet(3);
  for (const auto& r : graph)
    if (r.error >= graph_worst) {
      graph_worst = r.error;
      worst_name = r.name;
    }
  const double secs = seconds_since(t0);
  return {layer_worst < 1e-4 && graph_worst < 1e-4 && secs < 600.0,
          "layers max " + fmt("%.2e", layer_worst) + ", full graph max " + fmt("%.2e", graph_worst) + " (" + worst_name +
              ", " + std::to_string(graph.size()) + " tensors), " + fmt("%.1f", secs) + " s"};
}

// ---- 5: shape contract --------------------------------------------------------

Outcome shape_contract()
{
  const auto t0 = Clock::now();
  model::FifNetSpec spec;
  spec.input_size = 200;
  spec.num_classes = 8;
  const auto net = model::build_fifnet<float>(spec);
  bool ok = net.spec.spatial_chain() == std::vector<int>{200, 100, 50, 25, 13, 7};
  const int expect[] = {100, 50, 25, 13, 7};
  for (int m = 0; m < 5; ++m) ok = ok && net.graph.node(net.module_outputs[m]).out.h == expect[m];
  const auto pool_in = net.graph.node(net.graph.node(net.pool_node).inputs[0]).out;
  ok = ok && pool_in.c == 64 && pool_in.h == 7 && pool_in.w == 7;

  int rejected = 0;
  for (int bad : {16, 8, 0, -3}) {
    auto s = spec;
    s.input_size = bad;
    try {
      model::build_fifnet<float>(s);
    } catch (const std::invalid_argument&) {
      ++rejected;
    }
  }
  try {
    model::forward(net, nn::Tensor4<float>(1, 1, 100, 100));
  } catch (const std::invalid_argument&) {
    ++rejected;
  }
  const double secs = seconds_since(t0);
  return {ok && rejected == 5 && secs < 1.0,
          "pool input " + pool_in.str() + ", " + std::to_string(rejected) + "/5 bad shapes rejected, " +
              fmt("%.3f", secs) + " s"};
}

// ---- 6-10: desk-scale pipeline -----------------------------------------------

struct PipelineRun {
  std::unique_ptr<Manifest> manifest;
  model::FifNet<float> net;
  TrainResult train;
  EvalReport test;
  double seconds = 0.0;
};

PipelineRun run_pipeline(ExperimentConfig cfg, const fs::path& dir, const std::string& tag)
{
  const auto t0 = Clock::now();
  fs::remove_all(dir);
  cfg.dataset.output_dir = (dir / "dataset").string();
  cfg.train.checkpoint = (dir / "model.fifn").string();
  cfg.train.log = (dir / "train_log.csv").string();

  PipelineRun run;
  std::cerr << "[" << tag << "] generating " << cfg.dataset.image_count() << " images\n";
  run.manifest = std::make_unique<Manifest>(split_dataset(gen_dataset(cfg.dataset), cfg.split));
  write_manifest(*run.manifest);
  const Manifest& m = *run.manifest;

  run.net = model::build_fifnet<float>(cfg.model_spec());
  {
    const ImageSource tr(m, select_split(m, "train"));
    const ImageSource va(m, select_split(m, "val"));
    std::cerr << "[" << tag << "] training on " << tr.size() << " images, validating on " << va.size() << "\n";
    run.train = train(run.net, tr, va, cfg.train, [&](const EpochStats& e) {
      std::cerr << "[" << tag << "] epoch " << e.epoch << " loss " << fmt("%.4f", e.train_loss) << " val_acc "
                << fmt("%.4f", e.val_accuracy) << (e.best ? " *" : "") << "\n";
    });
  }
  run.test = evaluate(run.net, m, "test");
  write_report(run.test, dir / "report");
  run.seconds = seconds_since(t0);
  std::cerr << "[" << tag << "] test accuracy " << fmt("%.4f", run.test.overall.accuracy()) << " after "
            << fmt("%.0f", run.seconds) << " s\n";
  return run;
}

std::size_t per_cell(const Manifest& m, const std::string& split)
{
  std::map<std::pair<int, double>, std::size_t> n;
  for (const auto& r : m.records)
    if (r.split == split) ++n[{r.label, r.snr_db}];
  std::set<std::size_t> counts;
  for (const auto& [_, c] : n) counts.insert(c);
  return counts.size() == 1 ? *counts.begin() : 0;
}

Outcome desk_training(const PipelineRun& run)
{
  const double acc = run.test.overall.accuracy();
  const int epochs = static_cast<int>(run.train.history.size());
  const std::size_t tr = per_cell(*run.manifest, "train");
  const std::size_t te = per_cell(*run.manifest, "test");
  return {acc >= 0.90 && epochs <= 30 && run.seconds <= 7200.0 && tr == 300 && te == 50 &&
              run.manifest->image_size() == 50,
          "test accuracy " + fmt("%.4f", acc) + " (" + std::to_string(run.test.overall.correct) + "/" +
              std::to_string(run.test.overall.total) + "), " + std::to_string(tr) + " train / " + std::to_string(te) +
              " test per cell, best epoch " + std::to_string(run.train.best_epoch) + " of " + std::to_string(epochs) +
              ", " + fmt("%.0f", run.seconds) + " s"};
}

Outcome directional_ablation(const PipelineRun& big, const PipelineRun& small)
{
  try {
    check_same_frames(*small.manifest, *big.manifest);
  } catch (const std::invalid_argument& e) {
    return {false, e.what()};
  }
  const double lowest = big.test.snrs.front();
  const double a50 = big.test.accuracy_at(lowest);
  const double a25 = small.test.accuracy_at(lowest);
  return {a50 >= a25, "at " + fmt("%+.0f", lowest) + " dB: 50x50 " + fmt("%.4f", a50) + ", 25x25 " + fmt("%.4f", a25) +
                          " (25x25 overall " + fmt("%.4f", small.test.overall.accuracy()) + ")"};
}

Outcome snr_trend(const PipelineRun& run, const DatasetConfig& desk, const fs::path& dir)
{
  DatasetConfig d = desk;
  d.snr_list_db = {0, 5, 10, 15, 20};
  d.frames_per_class_per_snr = 100;
  d.master_seed = desk.master_seed + 1; // frames disjoint from the training set
  d.output_dir = dir.string();
  fs::remove_all(dir);
  const auto m = gen_dataset(d);
  const auto rep = evaluate(run.net, m, "all");
  bool ok = rep.snrs.size() >= 4;
  std::string detail;
  for (std::size_t i = 0; i < rep.snrs.size(); ++i) {
    const double a = rep.accuracy_at(rep.snrs[i]);
    if (i > 0 && a < rep.accuracy_at(rep.snrs[i - 1]) - 0.02) ok = false;
    detail += fmt("%+.0f dB:", rep.snrs[i]) + fmt("%.4f", a) + (i + 1 < rep.snrs.size() ? " " : "");
  }
  return {ok, detail};
}

/// Relative path -> bytes for every regular file under `root`.
std::map<std::string, std::string> tree_bytes(const fs::path& root)
{
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = render::read_file_bytes(e.path());
  return out;
}

Outcome determinism(const PipelineRun& first, const fs::path& first_dir, const ExperimentConfig& cfg)
{
  const fs::path moved = first_dir.string() + "_first";
  fs::remove_all(moved);
  fs::rename(first_dir, moved);
  const auto second = run_pipeline(cfg, first_dir, "desk50 repeat");
  const auto a = tree_bytes(moved / "dataset");
  const auto b = tree_bytes(first_dir / "dataset");
  std::size_t differing = a.size() == b.size() ? 0 : std::max(a.size(), b.size());
  for (const auto& [path, bytes] : a) {
    const auto it = b.find(path);
    if (it == b.end() || it->second != bytes) ++differing;
  }
  const bool same_conf = first.test.confusion == second.test.confusion;
  const bool same_log = render::read_file_bytes(moved / "train_log.csv") == render::read_file_bytes(first_dir / "train_log.csv");
  return {differing == 0 && same_conf,
          std::to_string(a.size()) + " dataset files, " + std::to_string(differing) + " differ; confusion " +
              (same_conf ? "identical" : "differs") + "; training log " + (same_log ? "identical" : "differs")};
}

Outcome checkpoint_roundtrip(const PipelineRun& run, const fs::path& dir)
{
  const fs::path path = dir / "roundtrip.fifn";
  nn::save_checkpoint(path, model::to_checkpoint(run.net));
  const auto loaded = model::from_checkpoint<float>(nn::load_checkpoint(path));
  const auto& m = *run.manifest;
  std::vector<std::vector<double>> imgs;
  const auto test = select_split(m, "test");
  for (std::size_t i = 0; i < 16 && i < test.size(); ++i) imgs.push_back(load_image(m, test[i]));
  const auto x = model::images_to_tensor<float>(imgs, m.image_size());
  const auto y1 = model::forward(run.net, x);
  const auto y2 = model::forward(loaded, x);
  const bool same =
      y1.data.size() == y2.data.size() && std::memcmp(y1.data.data(), y2.data.data(), y1.data.size() * sizeof(float)) == 0;
  return {same, std::to_string(imgs.size()) + " images, " + std::to_string(y1.data.size()) + " logits " +
                    (same ? "bit-identical" : "differ")};
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"acceptance suite"};
  std::string work = "acceptance_runs";
  std::string config = AMC_SOURCE_DIR "/configs/desk.json";
  std::set<int> only;
  app.add_option("--work-dir", work, "scratch directory for generated datasets and models");
  app.add_option("--config", config, "desk-scale experiment config");
  app.add_option("--only", only, "run only these criteria (6-10 share one training run)");
  CLI11_PARSE(app, argc, argv);

  const fs::path root = work;
  fs::create_directories(root);
  const auto wanted = [&](int c) { return only.empty() || only.count(c) > 0; };
  int failures = 0;
  std::ofstream summary(root / "acceptance.txt");
  const auto report = [&](int c, const std::string& name, const std::function<Outcome()>& fn) {
    if (!wanted(c)) return;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    const std::string line = "criterion " + std::to_string(c) + " " + (o.pass ? "PASS" : "FAIL") + "  " + name + ": " + o.detail;
    std::cout << line << std::endl;
    summary << line << std::endl;
  };

  report(1, "renderer oracle", renderer_oracle);
  report(2, "SNR calibration", snr_calibration);
  report(3, "channel tap powers", tap_powers);
  report(4, "gradient checks", gradients);
  report(5, "shape contract", shape_contract);

  if (wanted(6) || wanted(7) || wanted(8) || wanted(9) || wanted(10)) {
    const auto desk = load_experiment(config);
    std::optional<PipelineRun> big;
    try {
      big = run_pipeline(desk, root / "desk50", "desk50");
    } catch (const std::exception& e) {
      std::cerr << "desk run failed: " << e.what() << "\n";
    }
    const auto need_big = [&]() -> const PipelineRun& {
      if (!big) throw std::runtime_error("desk-scale run did not complete");
      return *big;
    };
    report(6, "desk-scale training", [&] { return desk_training(need_big()); });
    report(10, "checkpoint round trip", [&] { return checkpoint_roundtrip(need_big(), root); });
    report(8, "SNR trend", [&] { return snr_trend(need_big(), desk.dataset, root / "trend"); });
    report(7, "directional ablation", [&] {
      auto small_cfg = desk;
      small_cfg.dataset.image_size = 25;
      const auto small = run_pipeline(small_cfg, root / "desk25", "desk25");
      return directional_ablation(need_big(), small);
    });
    report(9, "determinism", [&] { return determinism(need_big(), root / "desk50", desk); });
  }
  std::cout << (failures ? "acceptance: " + std::to_string(failures) + " criteria failed" : "acceptance: all criteria passed")
            << std::endl;
  return failures ? 1 : 0;
}
