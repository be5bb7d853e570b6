#ifndef AMC_HARNESS_CONFIG_HPP
#define AMC_HARNESS_CONFIG_HPP

// Experiment configuration and its JSON form. Every section is optional in
// the file; missing fields keep their defaults.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "amc/channel/channel.hpp"
#include "amc/model/fifnet.hpp"
#include "amc/nn/optimizer.hpp"
#include "amc/render/constellation.hpp"
#include "amc/signal/modulation.hpp"
#include "amc/signal/pulse.hpp"

namespace amc::harness {

using json = nlohmann::json;
using signal::ModulationFormat;

inline constexpr int config_format_version = 1;

struct DatasetConfig {
  std::vector<ModulationFormat> formats{signal::all_formats.begin(), signal::all_formats.end()};
  std::vector<double> snr_list_db{-20, -15, -10, -5, 0, 5, 10, 15, 20, 25, 30};
  int frames_per_class_per_snr = 4000;
  int symbols_per_frame = 1000;
  int image_size = 200;
  double decay_mu = 0.5;
  std::optional<double> extent; // default: 1.5 x max alphabet radius over `formats`
  channel::ChannelProfile channel = channel::ChannelProfile::pedestrian_a();
  signal::PulseShape pulse{};
  std::uint64_t master_seed = 1;
  std::string output_dir = "data/dataset";

  render::RenderConfig render_config() const
  {
    return {image_size, decay_mu, extent ? *extent : render::default_extent(formats)};
  }

  std::size_t image_count() const
  {
    return formats.size() * snr_list_db.size() * static_cast<std::size_t>(frames_per_class_per_snr);
  }

  int label_of(ModulationFormat f) const
  {
    for (std::size_t i = 0; i < formats.size(); ++i)
      if (formats[i] == f) return static_cast<int>(i);
    reject("format ", signal::format_name(f), " is not part of this dataset");
  }

  std::vector<std::string> class_names() const
  {
    std::vector<std::string> out;
    for (auto f : formats) out.emplace_back(signal::format_name(f));
    return out;
  }

  void validate() const
  {
    if (formats.empty()) reject("dataset needs at least one format");
    for (std::size_t i = 0; i < formats.size(); ++i)
      for (std::size_t j = i + 1; j < formats.size(); ++j)
        if (formats[i] == formats[j]) reject("duplicate format ", signal::format_name(formats[i]));
    if (snr_list_db.empty()) reject("dataset needs at least one SNR");
    for (double s : snr_list_db) channel::SnrSpec{s}.validate();
    if (frames_per_class_per_snr < 1) reject("frames_per_class_per_snr must be >= 1");
    if (symbols_per_frame < 1) reject("symbols_per_frame must be >= 1");
    render_config().validate();
    channel.validate();
    pulse.validate();
  }
};

struct SplitConfig {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
  std::uint64_t seed = 1;
};

struct TrainConfig {
  nn::OptimizerConfig optimizer{};
  int batch_size = 64;
  int micro_batch = 16; // samples per forward/backward chunk; bounds memory only
  int epochs = 30;
  int plateau_patience = 3;      // epochs without val improvement before lr decay
  double lr_decay = 0.1;
  int early_stop_patience = 8;   // epochs without val improvement before stopping
  std::optional<double> stop_at_val_accuracy; // stop once val accuracy reaches this
  std::uint64_t seed = 1;
  std::string checkpoint = "runs/model.fifn";
  std::string log = "runs/train_log.csv";

  void validate() const
  {
    optimizer.validate();
    if (batch_size < 1 || micro_batch < 1 || epochs < 1) reject("batch_size, micro_batch and epochs must be >= 1");
    if (plateau_patience < 1 || early_stop_patience < 1) reject("patience values must be >= 1");
    if (!(lr_decay > 0.0 && lr_decay <= 1.0)) reject("lr_decay must lie in (0, 1]");
  }
};

struct EvalConfig {
  std::string split = "test";
  std::string report_dir = "runs/report";
};

struct AblationConfig {
  std::vector<int> sizes{25, 50, 100, 200};
  std::string output_dir = "runs/ablation";
};

struct ExperimentConfig {
  DatasetConfig dataset;
  SplitConfig split;
  model::FifNetSpec model; // input_size / num_classes are taken from the dataset
  TrainConfig train;
  EvalConfig eval;
  AblationConfig ablation;

  model::FifNetSpec model_spec() const
  {
    model::FifNetSpec s = model;
    s.input_size = dataset.image_size;
    s.num_classes = static_cast<int>(dataset.formats.size());
    return s;
  }
};

// ---- JSON ---------------------------------------------------------------

inline json to_json(const DatasetConfig& c)
{
  json j;
  j["formats"] = c.class_names();
  j["snr_list_db"] = c.snr_list_db;
  j["frames_per_class_per_snr"] = c.frames_per_class_per_snr;
  j["symbols_per_frame"] = c.symbols_per_frame;
  j["image_size"] = c.image_size;
  j["decay_mu"] = c.decay_mu;
  j["extent"] = c.render_config().extent;
  j["channel"] = {{"path_delays_ns", c.channel.path_delays_ns}, {"avg_path_gains_db", c.channel.avg_path_gains_db}};
  j["pulse"] = {{"rolloff", c.pulse.rolloff},
                {"symbol_rate", 1.0 / c.pulse.symbol_period},
                {"span_symbols", c.pulse.span_symbols},
                {"samples_per_symbol", c.pulse.samples_per_symbol}};
  json rings = json::object();
  for (auto f : c.formats)
    if (f == ModulationFormat::APSK16 || f == ModulationFormat::APSK64) {
      const auto spec = signal::apsk_ring_spec(f);
      rings[std::string(signal::format_name(f))] = {
          {"radii", spec.radii}, {"ring_orders", spec.ring_orders}, {"phase_offsets", spec.ring_phase_offsets}};
    }
  j["apsk_rings"] = rings;
  j["pixel_average"] = "per-pixel";
  j["normalization"] = "per-image-max";
  j["master_seed"] = c.master_seed;
  j["output_dir"] = c.output_dir;
  return j;
}

inline void from_json(const json& j, DatasetConfig& c)
{
  if (j.contains("formats")) {
    c.formats.clear();
    for (const auto& f : j.at("formats")) c.formats.push_back(signal::parse_format(f.get<std::string>()));
  }
  if (j.contains("snr_list_db")) c.snr_list_db = j.at("snr_list_db").get<std::vector<double>>();
  c.frames_per_class_per_snr = j.value("frames_per_class_per_snr", c.frames_per_class_per_snr);
  c.symbols_per_frame = j.value("symbols_per_frame", c.symbols_per_frame);
  c.image_size = j.value("image_size", c.image_size);
  c.decay_mu = j.value("decay_mu", c.decay_mu);
  if (j.contains("extent") && !j.at("extent").is_null()) c.extent = j.at("extent").get<double>();
  if (j.contains("channel")) {
    const auto& ch = j.at("channel");
    c.channel.path_delays_ns = ch.value("path_delays_ns", c.channel.path_delays_ns);
    c.channel.avg_path_gains_db = ch.value("avg_path_gains_db", c.channel.avg_path_gains_db);
  }
  if (j.contains("pulse")) {
    const auto& p = j.at("pulse");
    c.pulse.rolloff = p.value("rolloff", c.pulse.rolloff);
    if (p.contains("symbol_rate")) c.pulse.symbol_period = 1.0 / p.at("symbol_rate").get<double>();
    c.pulse.span_symbols = p.value("span_symbols", c.pulse.span_symbols);
    c.pulse.samples_per_symbol = p.value("samples_per_symbol", c.pulse.samples_per_symbol);
  }
  c.master_seed = j.value("master_seed", c.master_seed);
  c.output_dir = j.value("output_dir", c.output_dir);
}

inline json to_json(const nn::OptimizerConfig& o)
{
  return {{"kind", o.kind == nn::OptimizerConfig::Kind::sgd ? "sgd" : "adam"},
          {"learning_rate", o.learning_rate},
          {"momentum", o.momentum},
          {"beta1", o.beta1},
          {"beta2", o.beta2},
          {"epsilon", o.epsilon},
          {"weight_decay", o.weight_decay}};
}

inline void from_json(const json& j, nn::OptimizerConfig& o)
{
  if (j.contains("kind")) {
    const auto k = j.at("kind").get<std::string>();
    if (k == "sgd")
      o.kind = nn::OptimizerConfig::Kind::sgd;
    else if (k == "adam")
      o.kind = nn::OptimizerConfig::Kind::adam;
    else
      reject("unknown optimizer '", k, "' (expected sgd or adam)");
  }
  o.learning_rate = j.value("learning_rate", o.learning_rate);
  o.momentum = j.value("momentum", o.momentum);
  o.beta1 = j.value("beta1", o.beta1);
  o.beta2 = j.value("beta2", o.beta2);
  o.epsilon = j.value("epsilon", o.epsilon);
  o.weight_decay = j.value("weight_decay", o.weight_decay);
}

inline json to_json(const TrainConfig& t)
{
  json j{{"optimizer", to_json(t.optimizer)},
         {"batch_size", t.batch_size},
         {"micro_batch", t.micro_batch},
         {"epochs", t.epochs},
         {"plateau_patience", t.plateau_patience},
         {"lr_decay", t.lr_decay},
         {"early_stop_patience", t.early_stop_patience},
         {"seed", t.seed},
         {"checkpoint", t.checkpoint},
         {"log", t.log}};
  j["stop_at_val_accuracy"] = t.stop_at_val_accuracy ? json(*t.stop_at_val_accuracy) : json(nullptr);
  return j;
}

inline void from_json(const json& j, TrainConfig& t)
{
  if (j.contains("optimizer")) from_json(j.at("optimizer"), t.optimizer);
  t.batch_size = j.value("batch_size", t.batch_size);
  t.micro_batch = j.value("micro_batch", t.micro_batch);
  t.epochs = j.value("epochs", t.epochs);
  t.plateau_patience = j.value("plateau_patience", t.plateau_patience);
  t.lr_decay = j.value("lr_decay", t.lr_decay);
  t.early_stop_patience = j.value("early_stop_patience", t.early_stop_patience);
  if (j.contains("stop_at_val_accuracy") && !j.at("stop_at_val_accuracy").is_null())
    t.stop_at_val_accuracy = j.at("stop_at_val_accuracy").get<double>();
  t.seed = j.value("seed", t.seed);
  t.checkpoint = j.value("checkpoint", t.checkpoint);
  t.log = j.value("log", t.log);
}

inline json to_json(const ExperimentConfig& c)
{
  return {{"format_version", config_format_version},
          {"dataset", to_json(c.dataset)},
          {"split", {{"train", c.split.train}, {"val", c.split.val}, {"test", c.split.test}, {"seed", c.split.seed}}},
          {"model",
           {{"module_count", c.model.module_count},
            {"stem_filters", c.model.stem_filters},
            {"fc1_width", c.model.fc1_width},
            {"clip_ceiling", c.model.clip_ceiling}}},
          {"train", to_json(c.train)},
          {"eval", {{"split", c.eval.split}, {"report_dir", c.eval.report_dir}}},
          {"ablation", {{"sizes", c.ablation.sizes}, {"output_dir", c.ablation.output_dir}}}};
}

inline ExperimentConfig experiment_from_json(const json& j)
{
  if (j.contains("format_version") && j.at("format_version").get<int>() != config_format_version)
    reject("unsupported config format_version ", j.at("format_version").dump());
  ExperimentConfig c;
  if (j.contains("dataset")) from_json(j.at("dataset"), c.dataset);
  if (j.contains("split")) {
    const auto& s = j.at("split");
    c.split.train = s.value("train", c.split.train);
    c.split.val = s.value("val", c.split.val);
    c.split.test = s.value("test", c.split.test);
    c.split.seed = s.value("seed", c.split.seed);
  }
  if (j.contains("model")) {
    const auto& m = j.at("model");
    c.model.module_count = m.value("module_count", c.model.module_count);
    c.model.stem_filters = m.value("stem_filters", c.model.stem_filters);
    c.model.fc1_width = m.value("fc1_width", c.model.fc1_width);
    c.model.clip_ceiling = m.value("clip_ceiling", c.model.clip_ceiling);
  }
  if (j.contains("train")) from_json(j.at("train"), c.train);
  if (j.contains("eval")) {
    c.eval.split = j.at("eval").value("split", c.eval.split);
    c.eval.report_dir = j.at("eval").value("report_dir", c.eval.report_dir);
  }
  if (j.contains("ablation")) {
    c.ablation.sizes = j.at("ablation").value("sizes", c.ablation.sizes);
    c.ablation.output_dir = j.at("ablation").value("output_dir", c.ablation.output_dir);
  }
  return c;
}

inline ExperimentConfig load_experiment(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  return experiment_from_json(json::parse(in));
}

} // namespace amc::harness

#endif // AMC_HARNESS_CONFIG_HPP
