// Command-line front end: dataset generation, splitting, training,
// evaluation, size ablation, single-image classification and verification.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "amc/amc.hpp"

using namespace amc;
using namespace amc::harness;

namespace {

struct CommonOpts {
  std::string config;
  std::optional<std::uint64_t> seed;
};

struct DatasetOpts {
  std::string dataset_dir;
  std::vector<std::string> formats;
  std::vector<double> snrs;
  std::optional<int> frames;
  std::optional<int> symbols;
  std::optional<int> size;
};

ExperimentConfig load(const CommonOpts& c)
{
  return c.config.empty() ? ExperimentConfig{} : load_experiment(c.config);
}

void add_common(CLI::App* app, CommonOpts& c)
{
  app->add_option("--config", c.config, "experiment config (JSON)")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "seed override for this step");
}

void add_dataset(CLI::App* app, DatasetOpts& d)
{
  app->add_option("--dataset", d.dataset_dir, "dataset directory (overrides dataset.output_dir)");
}

void add_dataset_shape(CLI::App* app, DatasetOpts& d)
{
  app->add_option("--formats", d.formats, "modulation formats, e.g. QPSK 8PSK 16QAM");
  app->add_option("--snr", d.snrs, "SNR list in dB");
  app->add_option("--frames", d.frames, "frames per (class, SNR)");
  app->add_option("--symbols", d.symbols, "symbols per frame");
  app->add_option("--size", d.size, "image side in pixels");
}

void apply(const DatasetOpts& d, DatasetConfig& cfg)
{
  if (!d.dataset_dir.empty()) cfg.output_dir = d.dataset_dir;
  if (!d.formats.empty()) {
    cfg.formats.clear();
    for (const auto& f : d.formats) cfg.formats.push_back(signal::parse_format(f));
  }
  if (!d.snrs.empty()) cfg.snr_list_db = d.snrs;
  if (d.frames) cfg.frames_per_class_per_snr = *d.frames;
  if (d.symbols) cfg.symbols_per_frame = *d.symbols;
  if (d.size) cfg.image_size = *d.size;
}

void print_report(const EvalReport& rep)
{
  std::printf("overall accuracy %.4f (%zu/%zu)\n", rep.overall.accuracy(), rep.overall.correct, rep.overall.total);
  for (double s : rep.snrs) std::printf("  SNR %+6.1f dB  %.4f\n", s, rep.accuracy_at(s));
}

model::FifNet<float> load_model(const std::string& path, const ExperimentConfig& cfg)
{
  return model::from_checkpoint<float>(nn::load_checkpoint(path), cfg.model);
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Constellation-image modulation classification toolkit"};
  app.require_subcommand(1);

  CommonOpts gen_c, split_c, train_c, eval_c, abl_c, cls_c, ver_c;
  DatasetOpts gen_d, split_d, train_d, eval_d, abl_d, ver_d;

  auto* gen = app.add_subcommand("gen-dataset", "synthesize constellation images and a manifest");
  add_common(gen, gen_c);
  add_dataset(gen, gen_d);
  add_dataset_shape(gen, gen_d);

  auto* split = app.add_subcommand("split", "assign train/val/test stratified by class and SNR");
  add_common(split, split_c);
  add_dataset(split, split_d);
  std::optional<double> f_train, f_val, f_test;
  split->add_option("--train", f_train, "train fraction");
  split->add_option("--val", f_val, "validation fraction");
  split->add_option("--test", f_test, "test fraction");

  auto* tr = app.add_subcommand("train", "train FiF-Net on the train split");
  add_common(tr, train_c);
  add_dataset(tr, train_d);
  std::optional<int> epochs, batch;
  std::optional<double> lr;
  std::string optimizer, ckpt_out, log_out;
  bool dump_graph = false;
  tr->add_option("--epochs", epochs, "maximum epochs");
  tr->add_option("--batch", batch, "mini-batch size");
  tr->add_option("--lr", lr, "learning rate");
  tr->add_option("--optimizer", optimizer, "sgd or adam");
  tr->add_option("--checkpoint", ckpt_out, "output checkpoint path");
  tr->add_option("--log", log_out, "training log CSV path");
  tr->add_flag("--dump-graph", dump_graph, "print the layer graph and parameter counts");

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a split");
  add_common(ev, eval_c);
  add_dataset(ev, eval_d);
  std::string eval_ckpt, eval_split, report_dir;
  ev->add_option("--checkpoint", eval_ckpt, "checkpoint to evaluate")->required();
  ev->add_option("--split", eval_split, "train, val, test or all");
  ev->add_option("--report-dir", report_dir, "directory for CSV and text reports");

  auto* abl = app.add_subcommand("ablate-size", "train and evaluate at several image sizes");
  add_common(abl, abl_c);
  add_dataset_shape(abl, abl_d);
  std::vector<int> sizes;
  std::string abl_out;
  abl->add_option("--sizes", sizes, "image sizes, e.g. 25 50 100 200");
  abl->add_option("--output", abl_out, "ablation output directory");

  auto* cls = app.add_subcommand("classify", "classify one PGM image");
  add_common(cls, cls_c);
  std::string cls_ckpt, cls_image;
  cls->add_option("--checkpoint", cls_ckpt, "checkpoint")->required();
  cls->add_option("--image", cls_image, "PGM image")->required()->check(CLI::ExistingFile);

  auto* ver = app.add_subcommand("verify", "re-hash every image listed in a manifest");
  add_common(ver, ver_c);
  add_dataset(ver, ver_d);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      auto cfg = load(gen_c);
      apply(gen_d, cfg.dataset);
      if (gen_c.seed) cfg.dataset.master_seed = *gen_c.seed;
      std::size_t last = 0;
      const auto m = gen_dataset(cfg.dataset, [&](std::size_t done, std::size_t total) {
        if (done == total || done - last >= 1000) {
          std::fprintf(stderr, "\r%zu / %zu images", done, total);
          last = done;
        }
      });
      std::fprintf(stderr, "\n");
      std::printf("wrote %zu images and %s to %s\n", m.records.size(), manifest_name, cfg.dataset.output_dir.c_str());
    } else if (split->parsed()) {
      auto cfg = load(split_c);
      apply(split_d, cfg.dataset);
      if (split_c.seed) cfg.split.seed = *split_c.seed;
      if (f_train) cfg.split.train = *f_train;
      if (f_val) cfg.split.val = *f_val;
      if (f_test) cfg.split.test = *f_test;
      const auto m = split_dataset(read_manifest(cfg.dataset.output_dir), cfg.split);
      write_manifest(m);
      std::size_t n[3] = {0, 0, 0};
      for (const auto& r : m.records) n[r.split == "train" ? 0 : r.split == "val" ? 1 : 2]++;
      std::printf("train %zu  val %zu  test %zu\n", n[0], n[1], n[2]);
    } else if (tr->parsed()) {
      auto cfg = load(train_c);
      apply(train_d, cfg.dataset);
      if (train_c.seed) cfg.train.seed = *train_c.seed;
      if (epochs) cfg.train.epochs = *epochs;
      if (batch) cfg.train.batch_size = *batch;
      if (lr) cfg.train.optimizer.learning_rate = *lr;
      if (!optimizer.empty()) from_json(json{{"kind", optimizer}}, cfg.train.optimizer);
      if (!ckpt_out.empty()) cfg.train.checkpoint = ckpt_out;
      if (!log_out.empty()) cfg.train.log = log_out;
      const auto m = read_manifest(cfg.dataset.output_dir);
      auto spec = cfg.model;
      spec.input_size = m.image_size();
      spec.num_classes = static_cast<int>(m.class_names().size());
      auto net = model::build_fifnet<float>(spec);
      if (dump_graph) std::cout << model::graph_dump(net);
      const ImageSource train_set(m, select_split(m, "train"));
      const ImageSource val_set(m, select_split(m, "val"));
      const auto res = train(net, train_set, val_set, cfg.train, [](const EpochStats& e) {
        std::printf("epoch %3d  lr %.2e  loss %.4f  acc %.4f  val_loss %.4f  val_acc %.4f%s\n", e.epoch, e.learning_rate,
                    e.train_loss, e.train_accuracy, e.val_loss, e.val_accuracy, e.best ? "  *" : "");
        std::fflush(stdout);
      });
      std::printf("%s; best epoch %d, val accuracy %.4f; checkpoint %s\n", res.stop_reason.c_str(), res.best_epoch,
                  res.best_val_accuracy, cfg.train.checkpoint.c_str());
    } else if (ev->parsed()) {
      auto cfg = load(eval_c);
      apply(eval_d, cfg.dataset);
      if (!eval_split.empty()) cfg.eval.split = eval_split;
      if (!report_dir.empty()) cfg.eval.report_dir = report_dir;
      const auto m = read_manifest(cfg.dataset.output_dir);
      const auto net = load_model(eval_ckpt, cfg);
      const auto rep = evaluate(net, m, cfg.eval.split, cfg.train.micro_batch);
      write_report(rep, cfg.eval.report_dir);
      print_report(rep);
      std::printf("reports written to %s\n", cfg.eval.report_dir.c_str());
    } else if (abl->parsed()) {
      auto cfg = load(abl_c);
      apply(abl_d, cfg.dataset);
      if (abl_c.seed) {
        cfg.dataset.master_seed = *abl_c.seed;
        cfg.split.seed = *abl_c.seed;
        cfg.train.seed = *abl_c.seed;
      }
      if (!sizes.empty()) cfg.ablation.sizes = sizes;
      if (!abl_out.empty()) cfg.ablation.output_dir = abl_out;
      const auto res = run_ablation(cfg, [](int size, const std::string& stage) {
        std::fprintf(stderr, "[size %d] %s\n", size, stage.c_str());
      });
      for (int s : res.sizes) {
        std::printf("size %d: ", s);
        print_report(res.reports.at(s));
      }
    } else if (cls->parsed()) {
      const auto cfg = load(cls_c);
      const auto net = load_model(cls_ckpt, cfg);
      const auto img = render::read_pgm(cls_image);
      const auto p = model::predict(net, render::dequantize(img));
      const auto names = cfg.dataset.class_names();
      if (names.size() != p.probabilities.size())
        reject("config lists ", names.size(), " formats, checkpoint has ", p.probabilities.size(), " classes");
      std::printf("%s\n", names[p.label].c_str());
      for (std::size_t k = 0; k < names.size(); ++k) std::printf("  %-8s %.4f\n", names[k].c_str(), p.probabilities[k]);
    } else if (ver->parsed()) {
      auto cfg = load(ver_c);
      apply(ver_d, cfg.dataset);
      const auto rep = verify_dataset(read_manifest(cfg.dataset.output_dir));
      for (const auto& p : rep.missing) std::printf("missing  %s\n", p.c_str());
      for (const auto& p : rep.mismatched) std::printf("mismatch %s\n", p.c_str());
      std::printf("%zu images checked, %zu missing, %zu mismatched\n", rep.checked, rep.missing.size(), rep.mismatched.size());
      return rep.ok() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
