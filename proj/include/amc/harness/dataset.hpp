#ifndef AMC_HARNESS_DATASET_HPP
#define AMC_HARNESS_DATASET_HPP

// Dataset generation, the JSON-lines manifest, stratified splitting and
// integrity checks.
//
// Layout under the dataset root:
//   manifest.jsonl                      header line, then one record per image
//   images/<FORMAT>/snr<+NN>/<index>.pgm
//
// Each frame has its own seed derived from (master seed, format, SNR, frame
// index), so any single image can be regenerated in isolation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "amc/channel/channel.hpp"
#include "amc/harness/config.hpp"
#include "amc/harness/digest.hpp"
#include "amc/render/constellation.hpp"
#include "amc/render/pgm.hpp"
#include "amc/signal/modulation.hpp"
#include "amc/signal/pulse.hpp"

namespace amc::harness {

namespace fs = std::filesystem;

inline constexpr int manifest_format_version = 1;
inline constexpr const char* manifest_name = "manifest.jsonl";
inline constexpr const char* incomplete_marker = ".incomplete";

inline std::int64_t snr_key(double snr_db) { return std::llround(snr_db * 100.0) + 100000; }

inline std::uint64_t frame_seed(std::uint64_t master, ModulationFormat f, double snr_db, std::uint64_t frame_index)
{
  std::uint64_t s = mix_seed(master, static_cast<std::uint64_t>(f));
  s = mix_seed(s, static_cast<std::uint64_t>(snr_key(snr_db)));
  return mix_seed(s, frame_index);
}

struct FrameSeeds {
  std::uint64_t symbols;
  std::uint64_t channel;
  std::uint64_t noise;
};

inline FrameSeeds sub_seeds(std::uint64_t frame)
{
  return {mix_seed(frame, 1), mix_seed(frame, 2), mix_seed(frame, 3)};
}

/// Everything upstream of rendering for one frame.
struct FrameResult {
  std::uint64_t seed = 0;
  channel::ChannelRealization channel;
  render::SymbolPoints points; // after AGC, ready to render
};

inline FrameResult synthesize_frame(const DatasetConfig& cfg, ModulationFormat f, double snr_db, std::uint64_t index)
{
  FrameResult r;
  r.seed = frame_seed(cfg.master_seed, f, snr_db, index);
  const FrameSeeds s = sub_seeds(r.seed);
  const auto symbols = signal::draw_symbols(f, static_cast<std::size_t>(cfg.symbols_per_frame), s.symbols);
  const auto shaped = signal::pulse_shape(symbols, cfg.pulse);
  r.channel = channel::draw_channel(cfg.channel, s.channel);
  r.channel.frame_id = index;
  const auto faded = channel::apply_multipath(shaped, r.channel, cfg.channel);
  const auto noisy = channel::add_awgn(faded, channel::SnrSpec{snr_db}, s.noise);
  r.points = render::normalize_power(render::to_symbol_points(noisy, cfg.pulse));
  return r;
}

inline render::GrayImage render_frame(const FrameResult& frame, const render::RenderConfig& rc, ModulationFormat f,
                                      double snr_db)
{
  auto img = render::render(frame.points, rc);
  img.label = f;
  img.snr_db = snr_db;
  return render::quantize_8bit(img);
}

inline std::string snr_dir_name(double snr_db)
{
  char buf[32];
  if (snr_db == std::round(snr_db))
    std::snprintf(buf, sizeof buf, "snr%+03d", static_cast<int>(std::lround(snr_db)));
  else
    std::snprintf(buf, sizeof buf, "snr%+.2f", snr_db);
  return buf;
}

inline std::string image_rel_path(ModulationFormat f, double snr_db, std::uint64_t index)
{
  char name[32];
  std::snprintf(name, sizeof name, "%05llu.pgm", static_cast<unsigned long long>(index));
  return "images/" + std::string(signal::format_name(f)) + "/" + snr_dir_name(snr_db) + "/" + name;
}

// ---- manifest -------------------------------------------------------------

struct ManifestRecord {
  std::string path; // relative to the dataset root
  int label = 0;
  std::string format;
  double snr_db = 0.0;
  std::uint64_t frame_index = 0;
  std::uint64_t frame_seed = 0;
  std::string channel_digest;
  std::string points_digest;
  std::string sha256;
  int size = 0;
  std::string split; // "", "train", "val" or "test"
};

struct Manifest {
  json header_config; // dataset config snapshot
  json split_config;  // null until split
  std::vector<ManifestRecord> records;
  fs::path root;

  std::vector<std::string> class_names() const
  {
    return header_config.at("formats").get<std::vector<std::string>>();
  }
  int image_size() const { return header_config.at("image_size").get<int>(); }
  fs::path image_path(const ManifestRecord& r) const { return root / r.path; }
};

inline json to_json(const ManifestRecord& r)
{
  json j{{"kind", "image"},          {"path", r.path},
         {"label", r.label},         {"format", r.format},
         {"snr_db", r.snr_db},       {"frame_index", r.frame_index},
         {"frame_seed", r.frame_seed}, {"channel_digest", r.channel_digest},
         {"points_digest", r.points_digest}, {"sha256", r.sha256},
         {"size", r.size}};
  if (!r.split.empty()) j["split"] = r.split;
  return j;
}

inline ManifestRecord record_from_json(const json& j)
{
  ManifestRecord r;
  r.path = j.at("path").get<std::string>();
  r.label = j.at("label").get<int>();
  r.format = j.at("format").get<std::string>();
  r.snr_db = j.at("snr_db").get<double>();
  r.frame_index = j.at("frame_index").get<std::uint64_t>();
  r.frame_seed = j.at("frame_seed").get<std::uint64_t>();
  r.channel_digest = j.at("channel_digest").get<std::string>();
  r.points_digest = j.at("points_digest").get<std::string>();
  r.sha256 = j.at("sha256").get<std::string>();
  r.size = j.at("size").get<int>();
  r.split = j.value("split", std::string());
  return r;
}

inline void write_text_atomic(const fs::path& path, const std::string& text)
{
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline void write_manifest(const Manifest& m)
{
  json header{{"kind", "header"}, {"format_version", manifest_format_version}, {"config", m.header_config}};
  if (!m.split_config.is_null()) header["split"] = m.split_config;
  std::string text = header.dump() + "\n";
  for (const auto& r : m.records) text += to_json(r).dump() + "\n";
  write_text_atomic(m.root / manifest_name, text);
}

inline Manifest read_manifest(const fs::path& root)
{
  if (fs::exists(root / incomplete_marker))
    reject("dataset at ", root.string(), " is incomplete (generation was interrupted); regenerate it");
  std::ifstream in(root / manifest_name);
  if (!in) throw std::runtime_error("cannot open manifest in " + root.string());
  Manifest m;
  m.root = root;
  std::string line;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      reject("manifest line ", line_no, ": ", e.what());
    }
    if (j.value("kind", "") == "header") {
      const int v = j.at("format_version").get<int>();
      if (v != manifest_format_version) reject("unsupported manifest format_version ", v);
      m.header_config = j.at("config");
      if (j.contains("split")) m.split_config = j.at("split");
      have_header = true;
    } else {
      if (!have_header) reject("manifest line ", line_no, ": record before header");
      m.records.push_back(record_from_json(j));
    }
  }
  if (!have_header) reject("manifest in ", root.string(), " has no header line");
  return m;
}

// ---- generation -----------------------------------------------------------

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

inline Manifest gen_dataset(const DatasetConfig& cfg, const ProgressFn& progress = {})
{
  cfg.validate();
  const fs::path root = cfg.output_dir;
  fs::create_directories(root);
  write_text_atomic(root / incomplete_marker, "generation in progress\n");

  Manifest m;
  m.root = root;
  m.header_config = to_json(cfg);
  const auto rc = cfg.render_config();
  const std::size_t total = cfg.image_count();
  m.records.reserve(total);
  for (auto f : cfg.formats)
    for (double snr : cfg.snr_list_db)
      for (int i = 0; i < cfg.frames_per_class_per_snr; ++i) {
        const auto idx = static_cast<std::uint64_t>(i);
        const FrameResult frame = synthesize_frame(cfg, f, snr, idx);
        const auto img = render_frame(frame, rc, f, snr);
        const std::string bytes = render::encode_pgm(img);
        ManifestRecord r;
        r.path = image_rel_path(f, snr, idx);
        r.label = cfg.label_of(f);
        r.format = signal::format_name(f);
        r.snr_db = snr;
        r.frame_index = idx;
        r.frame_seed = frame.seed;
        r.channel_digest = sha256_hex(frame.channel.taps);
        r.points_digest = sha256_hex(frame.points.points);
        r.sha256 = sha256_hex(bytes);
        r.size = cfg.image_size;
        render::write_file_bytes(root / r.path, bytes);
        m.records.push_back(std::move(r));
        if (progress) progress(m.records.size(), total);
      }
  write_manifest(m);
  fs::remove(root / incomplete_marker);
  return m;
}

// ---- split ----------------------------------------------------------------

/// Largest-remainder apportionment of `n` items over `fractions`.
inline std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& fractions)
{
  std::vector<std::size_t> counts(fractions.size());
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < fractions.size(); ++k) {
    const double exact = fractions[k] * static_cast<double>(n);
    counts[k] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    assigned += counts[k];
    rem.push_back({exact - static_cast<double>(counts[k]), k});
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++counts[rem[i % rem.size()].second];
  return counts;
}

inline void validate_split(const SplitConfig& s)
{
  for (double f : {s.train, s.val, s.test})
    if (!(f >= 0.0 && f <= 1.0)) reject("split fractions must lie in [0, 1]");
  const double sum = s.train + s.val + s.test;
  if (std::abs(sum - 1.0) > 1e-9) reject("split fractions sum to ", sum, ", expected 1");
}

/// Stratified by (label, SNR): every stratum keeps the requested proportions.
inline Manifest split_dataset(Manifest m, const SplitConfig& s)
{
  validate_split(s);
  std::map<std::pair<int, std::int64_t>, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < m.records.size(); ++i)
    strata[{m.records[i].label, snr_key(m.records[i].snr_db)}].push_back(i);
  const std::vector<double> fractions{s.train, s.val, s.test};
  const char* names[3] = {"train", "val", "test"};
  for (auto& [key, idx] : strata) {
    const auto counts = apportion(idx.size(), fractions);
    for (int k = 0; k < 3; ++k)
      if (fractions[k] > 0.0 && counts[k] == 0)
        reject("split: ", names[k], " fraction ", fractions[k], " leaves stratum (label ", key.first, ", SNR ",
               m.records[idx.front()].snr_db, " dB) with no images; it has only ", idx.size());
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return m.records[a].frame_index < m.records[b].frame_index; });
    Rng rng(mix_seed(mix_seed(s.seed, static_cast<std::uint64_t>(key.first)), static_cast<std::uint64_t>(key.second)));
    std::shuffle(idx.begin(), idx.end(), rng);
    std::size_t pos = 0;
    for (int k = 0; k < 3; ++k)
      for (std::size_t c = 0; c < counts[k]; ++c) m.records[idx[pos++]].split = names[k];
  }
  m.split_config = {{"train", s.train}, {"val", s.val}, {"test", s.test}, {"seed", s.seed}};
  return m;
}

inline std::vector<ManifestRecord> select_split(const Manifest& m, const std::string& split)
{
  if (split != "train" && split != "val" && split != "test" && split != "all")
    reject("unknown split '", split, "' (expected train, val, test or all)");
  if (split != "all" && m.split_config.is_null()) reject("dataset has not been split yet; run the split step first");
  std::vector<ManifestRecord> out;
  for (const auto& r : m.records)
    if (split == "all" || r.split == split) out.push_back(r);
  return out;
}

/// Pixels in [0, 1]; checks the stored size.
inline std::vector<double> load_image(const Manifest& m, const ManifestRecord& r)
{
  const auto img = render::read_pgm(m.image_path(r));
  if (img.width != r.size || img.height != r.size)
    reject(r.path, ": image is ", img.width, "x", img.height, ", manifest says ", r.size);
  return render::dequantize(img);
}

// ---- verification ---------------------------------------------------------

struct VerifyReport {
  std::size_t checked = 0;
  std::vector<std::string> missing;
  std::vector<std::string> mismatched;
  bool ok() const { return missing.empty() && mismatched.empty(); }
};

inline VerifyReport verify_dataset(const Manifest& m)
{
  VerifyReport rep;
  for (const auto& r : m.records) {
    ++rep.checked;
    const fs::path p = m.image_path(r);
    if (!fs::exists(p)) {
      rep.missing.push_back(r.path);
      continue;
    }
    if (sha256_hex(render::read_file_bytes(p)) != r.sha256) rep.mismatched.push_back(r.path);
  }
  return rep;
}

} // namespace amc::harness

#endif // AMC_HARNESS_DATASET_HPP
