#ifndef AMC_HARNESS_ABLATION_HPP
#define AMC_HARNESS_ABLATION_HPP

// Image-size ablation: the same frames rendered at several resolutions,
// one model trained and evaluated per size.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "amc/harness/config.hpp"
#include "amc/harness/dataset.hpp"
#include "amc/harness/evaluate.hpp"
#include "amc/harness/train.hpp"

namespace amc::harness {

/// Frames match across sizes when every record pairs up with equal seed and
/// equal pre-render symbol points.
inline void check_same_frames(const Manifest& a, const Manifest& b)
{
  if (a.records.size() != b.records.size())
    reject("ablation: datasets hold ", a.records.size(), " and ", b.records.size(), " images");
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const auto& x = a.records[i];
    const auto& y = b.records[i];
    if (x.frame_seed != y.frame_seed || x.points_digest != y.points_digest || x.label != y.label || x.split != y.split)
      reject("ablation: record ", i, " (", x.path, ") differs between sizes ", x.size, " and ", y.size);
  }
}

struct AblationResult {
  std::vector<int> sizes;
  std::map<int, EvalReport> reports;
  std::map<int, TrainResult> training;
};

using SizeCallback = std::function<void(int size, const std::string& stage)>;

inline AblationResult run_ablation(const ExperimentConfig& base, const SizeCallback& on_stage = {})
{
  AblationResult out;
  const std::filesystem::path root = base.ablation.output_dir;
  std::optional<Manifest> reference;
  for (int size : base.ablation.sizes) {
    ExperimentConfig cfg = base;
    cfg.dataset.image_size = size;
    // one extent for every size so only the resolution changes
    cfg.dataset.extent = base.dataset.render_config().extent;
    const auto dir = root / ("size" + std::to_string(size));
    cfg.dataset.output_dir = (dir / "dataset").string();
    cfg.train.checkpoint = (dir / "model.fifn").string();
    cfg.train.log = (dir / "train_log.csv").string();
    cfg.model_spec().validate();

    if (on_stage) on_stage(size, "generate");
    Manifest m = split_dataset(gen_dataset(cfg.dataset), cfg.split);
    write_manifest(m);
    if (reference)
      check_same_frames(*reference, m);
    else
      reference = m;

    if (on_stage) on_stage(size, "train");
    auto net = model::build_fifnet<float>(cfg.model_spec());
    const ImageSource tr(m, select_split(m, "train"));
    const ImageSource va(m, select_split(m, "val"));
    out.training[size] = train(net, tr, va, cfg.train);

    if (on_stage) on_stage(size, "evaluate");
    out.reports[size] = evaluate(net, m, base.eval.split, cfg.train.micro_batch);
    write_report(out.reports[size], dir / "report");
    out.sizes.push_back(size);
  }

  std::string csv = "# format_version=" + std::to_string(report_format_version) + "\nimage_size,snr_db,accuracy\n";
  for (int size : out.sizes) {
    const auto& rep = out.reports.at(size);
    for (double s : rep.snrs) csv += std::to_string(size) + "," + fmt_double(s, 2) + "," + fmt_double(rep.accuracy_at(s)) + "\n";
    csv += std::to_string(size) + ",all," + fmt_double(rep.overall.accuracy()) + "\n";
  }
  write_text_atomic(root / "ablation.csv", csv);
  return out;
}

} // namespace amc::harness

#endif // AMC_HARNESS_ABLATION_HPP
