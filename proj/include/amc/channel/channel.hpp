#ifndef AMC_CHANNEL_CHANNEL_HPP
#define AMC_CHANNEL_CHANNEL_HPP

// Quasi-static multipath Rayleigh fading and SNR-calibrated AWGN.

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "amc/common.hpp"
#include "amc/signal/pulse.hpp"

namespace amc::channel {

using signal::IqFrame;

struct ChannelProfile {
  std::vector<double> path_delays_ns;
  std::vector<double> avg_path_gains_db;

  /// ITU Pedestrian A.
  static ChannelProfile pedestrian_a() { return {{0.0, 110.0, 190.0, 410.0}, {0.0, -9.7, -19.2, -22.8}}; }

  std::size_t path_count() const { return path_delays_ns.size(); }

  double path_power(std::size_t k) const { return std::pow(10.0, avg_path_gains_db[k] / 10.0); }

  void validate() const
  {
    if (path_delays_ns.empty() || path_delays_ns.size() != avg_path_gains_db.size())
      reject("channel profile needs equal-length, non-empty delay and gain lists");
    if (path_delays_ns.front() != 0.0) reject("first path delay must be 0 ns");
    for (std::size_t k = 0; k < path_count(); ++k) {
      if (path_delays_ns[k] < 0.0) reject("path delays must be non-negative");
      if (avg_path_gains_db[k] > 0.0) reject("average path gains must be <= 0 dB");
    }
  }
};

struct ChannelRealization {
  std::vector<Complex> taps;
  std::uint64_t frame_id = 0;
};

struct SnrSpec {
  double snr_db = 0.0;

  static constexpr double min_db = -20.0;
  static constexpr double max_db = 30.0;

  void validate() const
  {
    if (!(snr_db >= min_db && snr_db <= max_db)) reject("SNR ", snr_db, " dB outside [-20, +30] dB");
  }
};

/// One complex circular Gaussian tap per path with E|tap_k|^2 = 10^(gain_k/10).
inline ChannelRealization draw_channel(const ChannelProfile& profile, std::uint64_t seed)
{
  profile.validate();
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ChannelRealization out;
  out.frame_id = seed;
  for (std::size_t k = 0; k < profile.path_count(); ++k) {
    const double sigma = std::sqrt(profile.path_power(k) / 2.0);
    const double re = gauss(rng);
    const double im = gauss(rng);
    out.taps.emplace_back(sigma * re, sigma * im);
  }
  return out;
}

inline constexpr int interpolator_taps = 64;

/// Hann-windowed sinc weights for delaying by `frac` in [0, 1) samples:
/// y[n] = sum_m h[m] x[n - m], m in [-31, 32].
inline std::vector<double> fractional_delay_kernel(double frac)
{
  constexpr int half = interpolator_taps / 2;
  std::vector<double> h(interpolator_taps);
  for (int m = -half + 1; m <= half; ++m) {
    const double u = m - frac;
    const double window = 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * u / (interpolator_taps + 1)));
    h[m + half - 1] = signal::sinc(u) * window;
  }
  return h;
}

/// Sum over paths of tap_k times the input delayed by delay_k. Integer-sample
/// delays are exact shifts; fractional ones use the windowed-sinc kernel.
/// Samples before the frame start are taken as zero; length is preserved.
inline IqFrame apply_multipath(const IqFrame& frame, const ChannelRealization& realization, const ChannelProfile& profile)
{
  frame.validate();
  profile.validate();
  if (frame.origin != signal::SampleOrigin::oversampled) reject("apply_multipath expects an oversampled frame");
  if (realization.taps.size() != profile.path_count())
    reject("channel realization has ", realization.taps.size(), " taps, profile has ", profile.path_count(), " paths");

  const auto n = static_cast<std::ptrdiff_t>(frame.samples.size());
  const double duration_ns = 1e9 * static_cast<double>(n) / frame.sample_rate;
  IqFrame out{std::vector<Complex>(frame.samples.size()), frame.sample_rate, frame.origin};
  constexpr int half = interpolator_taps / 2;

  for (std::size_t k = 0; k < profile.path_count(); ++k) {
    if (profile.path_delays_ns[k] >= duration_ns)
      reject("path delay ", profile.path_delays_ns[k], " ns exceeds frame duration ", duration_ns, " ns");
    const Complex tap = realization.taps[k];
    if (tap == Complex{}) continue;
    const double delay = profile.path_delays_ns[k] * 1e-9 * frame.sample_rate;
    double whole = std::floor(delay);
    double frac = delay - whole;
    if (frac < 1e-9) frac = 0.0;
    if (frac > 1.0 - 1e-9) {
      whole += 1.0;
      frac = 0.0;
    }
    const auto shift = static_cast<std::ptrdiff_t>(whole);
    if (frac == 0.0) {
      for (std::ptrdiff_t i = shift; i < n; ++i) out.samples[i] += tap * frame.samples[i - shift];
      continue;
    }
    const std::vector<double> h = fractional_delay_kernel(frac);
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      Complex acc{};
      for (int m = -half + 1; m <= half; ++m) {
        const std::ptrdiff_t src = i - shift - m;
        if (src < 0 || src >= n) continue;
        acc += h[m + half - 1] * frame.samples[src];
      }
      out.samples[i] += tap * acc;
    }
  }
  return out;
}

/// Adds complex white Gaussian noise whose per-sample variance is the measured
/// input power divided by 10^(snr/10).
inline IqFrame add_awgn(const IqFrame& frame, SnrSpec spec, std::uint64_t seed)
{
  frame.validate();
  spec.validate();
  const double p_sig = mean_power(frame.samples);
  if (!(p_sig > 0.0)) reject("add_awgn: input frame has zero power, SNR is undefined");
  const double sigma = std::sqrt(p_sig / std::pow(10.0, spec.snr_db / 10.0) / 2.0);
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  IqFrame out = frame;
  for (auto& s : out.samples) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    s += Complex(sigma * re, sigma * im);
  }
  return out;
}

/// 10 log10(P_clean / P_(noisy - clean)). Returns +infinity when the two
/// frames are identical.
inline double measure_snr(const IqFrame& clean, const IqFrame& noisy)
{
  if (clean.samples.size() != noisy.samples.size())
    reject("measure_snr: length mismatch (", clean.samples.size(), " vs ", noisy.samples.size(), ")");
  double p_clean = 0.0;
  double p_noise = 0.0;
  for (std::size_t i = 0; i < clean.samples.size(); ++i) {
    p_clean += std::norm(clean.samples[i]);
    p_noise += std::norm(noisy.samples[i] - clean.samples[i]);
  }
  if (p_noise == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(p_clean / p_noise);
}

} // namespace amc::channel

#endif // AMC_CHANNEL_CHANNEL_HPP
