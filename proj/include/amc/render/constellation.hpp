#ifndef AMC_RENDER_CONSTELLATION_HPP
#define AMC_RENDER_CONSTELLATION_HPP

// Symbol-point recovery and gray-scale constellation rendering.
//
// Pixel value for pixel j holding K points:
//   V_j = (1/K) * sum_i P_ij * exp(-mu * d_ij)
// with P_ij = I^2 + Q^2 and d_ij the distance (in pixel widths) from point i to
// the centre of pixel j. Empty pixels are 0.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "amc/common.hpp"
#include "amc/signal/modulation.hpp"
#include "amc/signal/pulse.hpp"

namespace amc::render {

struct SymbolPoints {
  std::vector<Complex> points;

  std::size_t count() const { return points.size(); }

  void validate() const
  {
    if (points.empty()) reject("symbol point set is empty");
    for (const auto& p : points)
      if (!std::isfinite(p.real()) || !std::isfinite(p.imag())) reject("symbol point set contains non-finite values");
  }
};

/// Samples the pulse-shaped waveform at symbol instants (after removing the
/// transmit filter group delay) and undoes the pulse peak gain. The raised
/// cosine is Nyquist, so this is ISI-free on an identity channel.
inline SymbolPoints to_symbol_points(const signal::IqFrame& frame, const signal::PulseShape& shape)
{
  shape.validate();
  if (frame.origin != signal::SampleOrigin::oversampled) reject("to_symbol_points expects an oversampled frame");
  const auto span = static_cast<std::size_t>(shape.span_symbols * shape.samples_per_symbol);
  if (frame.samples.size() <= span)
    reject("frame of ", frame.samples.size(), " samples is shorter than one filter span (", span + 1, ")");
  const auto sps = static_cast<std::size_t>(shape.samples_per_symbol);
  const std::size_t n_sym = (frame.samples.size() - span + sps - 1) / sps;
  const double peak = signal::raised_cosine_taps(shape)[shape.group_delay()];
  SymbolPoints out;
  out.points.reserve(n_sym);
  for (std::size_t k = 0; k < n_sym; ++k) out.points.push_back(frame.samples[shape.group_delay() + k * sps] / peak);
  return out;
}

/// Scales the points to unit mean power (receiver AGC).
inline SymbolPoints normalize_power(SymbolPoints pts)
{
  pts.validate();
  const double p = mean_power(pts.points);
  if (!(p > 0.0)) reject("normalize_power: zero-power point set");
  const double g = 1.0 / std::sqrt(p);
  for (auto& x : pts.points) x *= g;
  return pts;
}

struct RenderConfig {
  int image_size = 200;
  double decay_mu = 0.5;
  double extent = 2.0; // axes span [-extent, +extent] on I and Q

  void validate() const
  {
    if (image_size < 8) reject("image_size must be >= 8, got ", image_size);
    if (!(decay_mu > 0.0)) reject("decay_mu must be positive");
    if (!(extent > 0.0)) reject("extent must be positive");
  }
};

/// 1.5 x the largest alphabet radius among `formats`.
inline double default_extent(std::span<const signal::ModulationFormat> formats)
{
  double r = 0.0;
  for (auto f : formats) r = std::max(r, signal::build_alphabet(f).max_radius());
  return 1.5 * r;
}

/// Where a point lands: pixel (row, col) plus its distance to that pixel's
/// centre in pixel units. Points outside the extent are clamped onto the
/// border before binning.
struct PixelHit {
  int row;
  int col;
  double distance;
};

inline PixelHit locate(Complex p, const RenderConfig& cfg)
{
  const double n = cfg.image_size;
  const double u = std::clamp((p.real() + cfg.extent) / (2.0 * cfg.extent) * n, 0.0, n);
  const double v = std::clamp((cfg.extent - p.imag()) / (2.0 * cfg.extent) * n, 0.0, n);
  const int col = std::min(static_cast<int>(u), cfg.image_size - 1);
  const int row = std::min(static_cast<int>(v), cfg.image_size - 1);
  const double du = u - (col + 0.5);
  const double dv = v - (row + 0.5);
  return {row, col, std::sqrt(du * du + dv * dv)};
}

struct RenderProvenance {
  std::string pixel_average = "per-pixel"; // how K is counted
  std::string normalization = "per-image-max";
  double decay_mu = 0.5;
  double extent = 2.0;
  std::size_t point_count = 0;
};

struct ConstellationImage {
  int size = 0;
  std::vector<double> pixels; // row-major, [0, 1]
  signal::ModulationFormat label = signal::ModulationFormat::QPSK;
  double snr_db = 0.0;
  RenderProvenance provenance;

  double at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * size + col]; }
};

/// Unnormalized pixel values, row-major image_size^2.
inline std::vector<double> render_raw(const SymbolPoints& pts, const RenderConfig& cfg)
{
  pts.validate();
  cfg.validate();
  const std::size_t n_pix = static_cast<std::size_t>(cfg.image_size) * cfg.image_size;
  std::vector<double> sum(n_pix, 0.0);
  std::vector<std::uint32_t> count(n_pix, 0);
  for (const auto& p : pts.points) {
    const PixelHit hit = locate(p, cfg);
    const std::size_t j = static_cast<std::size_t>(hit.row) * cfg.image_size + hit.col;
    sum[j] += std::norm(p) * std::exp(-cfg.decay_mu * hit.distance);
    ++count[j];
  }
  for (std::size_t j = 0; j < n_pix; ++j)
    if (count[j] > 0) sum[j] /= count[j];
  return sum;
}

inline ConstellationImage render(const SymbolPoints& pts, const RenderConfig& cfg)
{
  ConstellationImage img;
  img.size = cfg.image_size;
  img.pixels = render_raw(pts, cfg);
  const double peak = *std::max_element(img.pixels.begin(), img.pixels.end());
  if (peak > 0.0)
    for (double& v : img.pixels) v /= peak;
  img.provenance.decay_mu = cfg.decay_mu;
  img.provenance.extent = cfg.extent;
  img.provenance.point_count = pts.count();
  return img;
}

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  bool operator==(const GrayImage&) const = default;
};

/// round(v * 255), halves rounded up.
inline std::uint8_t quantize_pixel(double v)
{
  if (!(v >= 0.0 && v <= 1.0)) reject("pixel value ", v, " outside [0, 1]");
  return static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5));
}

inline GrayImage quantize_8bit(const ConstellationImage& img)
{
  GrayImage out{img.size, img.size, {}};
  out.pixels.reserve(img.pixels.size());
  for (double v : img.pixels) out.pixels.push_back(quantize_pixel(v));
  return out;
}

inline std::vector<double> dequantize(const GrayImage& img)
{
  std::vector<double> out;
  out.reserve(img.pixels.size());
  for (auto q : img.pixels) out.push_back(q / 255.0);
  return out;
}

} // namespace amc::render

#endif // AMC_RENDER_CONSTELLATION_HPP
