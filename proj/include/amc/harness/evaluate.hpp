#ifndef AMC_HARNESS_EVALUATE_HPP
#define AMC_HARNESS_EVALUATE_HPP

// Batched inference over manifest records and accuracy reports.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "amc/harness/dataset.hpp"
#include "amc/model/fifnet.hpp"

namespace amc::harness {

inline constexpr int report_format_version = 1;

/// Pixel store for a list of records: cached in memory when small, else read
/// from disk on every access.
class ImageSource {
public:
  ImageSource(const Manifest& m, std::vector<ManifestRecord> records, std::size_t cache_limit_bytes = std::size_t{1} << 30)
      : manifest_(&m), records_(std::move(records))
  {
    const std::size_t bytes = records_.size() * static_cast<std::size_t>(m.image_size()) * m.image_size() * sizeof(float);
    if (bytes <= cache_limit_bytes) {
      cache_.reserve(records_.size());
      for (const auto& r : records_) {
        const auto px = load_image(m, r);
        cache_.emplace_back(px.begin(), px.end());
      }
    }
  }

  std::size_t size() const { return records_.size(); }
  const ManifestRecord& record(std::size_t i) const { return records_[i]; }
  const std::vector<ManifestRecord>& records() const { return records_; }
  int image_size() const { return manifest_->image_size(); }

  template <typename T>
  nn::Tensor4<T> batch(std::span<const std::size_t> idx) const
  {
    const int s = image_size();
    nn::Tensor4<T> t(static_cast<int>(idx.size()), 1, s, s);
    for (std::size_t n = 0; n < idx.size(); ++n) {
      T* dst = t.sample(static_cast<int>(n));
      if (!cache_.empty()) {
        std::copy(cache_[idx[n]].begin(), cache_[idx[n]].end(), dst);
      } else {
        const auto px = load_image(*manifest_, records_[idx[n]]);
        std::copy(px.begin(), px.end(), dst);
      }
    }
    return t;
  }

private:
  const Manifest* manifest_;
  std::vector<ManifestRecord> records_;
  std::vector<std::vector<float>> cache_;
};

/// Logits for every record, (N, classes) row-major.
template <typename T>
std::vector<std::vector<double>> infer_logits(const model::FifNet<T>& net, const ImageSource& src, int micro_batch = 16)
{
  if (src.image_size() != net.spec.input_size)
    reject("dataset images are ", src.image_size(), "x", src.image_size(), ", model expects ", net.spec.input_size);
  std::vector<std::vector<double>> out;
  out.reserve(src.size());
  nn::Workspace<T> ws;
  for (std::size_t start = 0; start < src.size(); start += static_cast<std::size_t>(micro_batch)) {
    const std::size_t end = std::min(src.size(), start + static_cast<std::size_t>(micro_batch));
    std::vector<std::size_t> idx(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const auto& logits = ws.forward(net.graph, src.batch<T>(idx));
    const int k = static_cast<int>(logits.shape.sample_size());
    for (std::size_t n = 0; n < idx.size(); ++n) {
      const T* row = logits.sample(static_cast<int>(n));
      out.emplace_back(row, row + k);
    }
  }
  return out;
}

inline int argmax(const std::vector<double>& v)
{
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

struct CellStats {
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

struct EvalReport {
  std::vector<std::string> class_names;
  std::vector<double> snrs;                            // sorted ascending
  std::map<double, std::vector<CellStats>> by_snr_class; // snr -> per class
  std::map<double, CellStats> by_snr;
  std::vector<std::vector<std::size_t>> confusion;     // [truth][pred]
  CellStats overall;

  double accuracy_at(double snr) const { return by_snr.at(snr).accuracy(); }
};

inline EvalReport evaluate_predictions(const std::vector<std::string>& class_names, const std::vector<int>& truths,
                                       const std::vector<int>& preds, const std::vector<double>& snrs)
{
  if (truths.size() != preds.size() || truths.size() != snrs.size())
    reject("evaluate_predictions: truths, predictions and SNRs differ in length");
  const std::size_t k = class_names.size();
  EvalReport rep;
  rep.class_names = class_names;
  rep.confusion.assign(k, std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < truths.size(); ++i) {
    const int t = truths[i];
    const int p = preds[i];
    if (t < 0 || t >= static_cast<int>(k) || p < 0 || p >= static_cast<int>(k))
      reject("evaluate_predictions: label out of range at index ", i);
    auto& cells = rep.by_snr_class[snrs[i]];
    if (cells.empty()) cells.resize(k);
    const bool hit = t == p;
    cells[t].total += 1;
    cells[t].correct += hit;
    rep.by_snr[snrs[i]].total += 1;
    rep.by_snr[snrs[i]].correct += hit;
    rep.overall.total += 1;
    rep.overall.correct += hit;
    rep.confusion[t][p] += 1;
  }
  for (const auto& [s, _] : rep.by_snr) rep.snrs.push_back(s);
  return rep;
}

template <typename T>
EvalReport evaluate(const model::FifNet<T>& net, const Manifest& m, const std::string& split, int micro_batch = 16)
{
  const ImageSource src(m, select_split(m, split));
  if (src.size() == 0) reject("split '", split, "' is empty");
  const auto logits = infer_logits(net, src, micro_batch);
  std::vector<int> truths, preds;
  std::vector<double> snrs;
  for (std::size_t i = 0; i < src.size(); ++i) {
    truths.push_back(src.record(i).label);
    preds.push_back(argmax(logits[i]));
    snrs.push_back(src.record(i).snr_db);
  }
  auto names = m.class_names();
  if (static_cast<int>(names.size()) != net.spec.num_classes)
    reject("dataset has ", names.size(), " classes, model has ", net.spec.num_classes);
  return evaluate_predictions(names, truths, preds, snrs);
}

inline std::string fmt_double(double v, int prec = 6)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

inline void write_report(const EvalReport& rep, const std::filesystem::path& dir)
{
  const std::string version = "# format_version=" + std::to_string(report_format_version) + "\n";
  std::string acc = version + "snr_db,accuracy,correct,total\n";
  for (double s : rep.snrs) {
    const auto& c = rep.by_snr.at(s);
    acc += fmt_double(s, 2) + "," + fmt_double(c.accuracy()) + "," + std::to_string(c.correct) + "," +
           std::to_string(c.total) + "\n";
  }
  write_text_atomic(dir / "accuracy_by_snr.csv", acc);

  std::string per = version + "snr_db,class,accuracy,correct,total\n";
  for (double s : rep.snrs) {
    const auto& cells = rep.by_snr_class.at(s);
    for (std::size_t k = 0; k < cells.size(); ++k)
      per += fmt_double(s, 2) + "," + rep.class_names[k] + "," + fmt_double(cells[k].accuracy()) + "," +
             std::to_string(cells[k].correct) + "," + std::to_string(cells[k].total) + "\n";
  }
  write_text_atomic(dir / "per_class.csv", per);

  std::string conf = version + "truth\\pred";
  for (const auto& n : rep.class_names) conf += "," + n;
  conf += "\n";
  for (std::size_t t = 0; t < rep.confusion.size(); ++t) {
    conf += rep.class_names[t];
    for (auto v : rep.confusion[t]) conf += "," + std::to_string(v);
    conf += "\n";
  }
  write_text_atomic(dir / "confusion.csv", conf);

  std::ostringstream txt;
  txt << "report format_version " << report_format_version << "\n";
  txt << "overall accuracy " << fmt_double(rep.overall.accuracy(), 4) << " (" << rep.overall.correct << "/"
      << rep.overall.total << ")\n";
  for (double s : rep.snrs)
    txt << "  SNR " << fmt_double(s, 1) << " dB: " << fmt_double(rep.by_snr.at(s).accuracy(), 4) << "\n";
  write_text_atomic(dir / "summary.txt", txt.str());
}

} // namespace amc::harness

#endif // AMC_HARNESS_EVALUATE_HPP
