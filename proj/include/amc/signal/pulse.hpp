#ifndef AMC_SIGNAL_PULSE_HPP
#define AMC_SIGNAL_PULSE_HPP

#include <cmath>
#include <numbers>
#include <vector>

#include "amc/common.hpp"
#include "amc/signal/modulation.hpp"

namespace amc::signal {

enum class SampleOrigin { oversampled, symbol_spaced };

struct IqFrame {
  std::vector<Complex> samples;
  double sample_rate = 1.0; // Hz
  SampleOrigin origin = SampleOrigin::oversampled;

  void validate() const
  {
    if (!(sample_rate > 0.0)) reject("IqFrame sample_rate must be positive");
    if (samples.empty()) reject("IqFrame must be non-empty");
  }
};

/// Raised-cosine pulse g(t) = sinc(t/T) cos(pi a t/T) / (1 - 4 a^2 t^2 / T^2).
struct PulseShape {
  double rolloff = 0.35;
  double symbol_period = 1.0 / 3.84e6; // seconds
  int span_symbols = 8;
  int samples_per_symbol = 8;

  void validate() const
  {
    if (!(rolloff >= 0.0 && rolloff <= 1.0)) reject("roll-off must lie in [0, 1], got ", rolloff);
    if (!(symbol_period > 0.0)) reject("symbol period must be positive");
    if (span_symbols < 4 || span_symbols % 2 != 0) reject("span_symbols must be even and >= 4, got ", span_symbols);
    if (samples_per_symbol < 2) reject("samples_per_symbol must be >= 2, got ", samples_per_symbol);
  }

  int tap_count() const { return span_symbols * samples_per_symbol + 1; }
  int group_delay() const { return span_symbols * samples_per_symbol / 2; }
  double sample_rate() const { return samples_per_symbol / symbol_period; }
};

inline double sinc(double x)
{
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

/// Raised-cosine value at normalized time u = t/T, with both removable
/// singularities replaced by their limits.
inline double raised_cosine(double u, double rolloff)
{
  if (u == 0.0) return 1.0;
  const double d = 1.0 - 4.0 * rolloff * rolloff * u * u;
  if (rolloff > 0.0 && std::abs(d) < 1e-10) return std::numbers::pi / 4.0 * sinc(1.0 / (2.0 * rolloff));
  return sinc(u) * std::cos(std::numbers::pi * rolloff * u) / d;
}

/// Unit-energy, symmetric taps sampled at t = k T / sps for |t| <= span T / 2.
inline std::vector<double> raised_cosine_taps(const PulseShape& shape)
{
  shape.validate();
  const int half = shape.group_delay();
  std::vector<double> taps(shape.tap_count());
  for (int k = -half; k <= half; ++k)
    taps[k + half] = raised_cosine(static_cast<double>(k) / shape.samples_per_symbol, shape.rolloff);
  double energy = 0.0;
  for (double t : taps) energy += t * t;
  const double scale = 1.0 / std::sqrt(energy);
  for (double& t : taps) t *= scale;
  return taps;
}

/// Upsamples the symbol train by sps and convolves it with the pulse taps.
/// Output length is count * sps + span * sps (full convolution transient).
inline IqFrame pulse_shape(const SymbolFrame& frame, const PulseShape& shape)
{
  if (frame.symbols.empty()) reject("pulse_shape: empty symbol frame");
  const std::vector<double> taps = raised_cosine_taps(shape);
  const int sps = shape.samples_per_symbol;
  const std::size_t n_sym = frame.symbols.size();
  IqFrame out;
  out.sample_rate = shape.sample_rate();
  out.origin = SampleOrigin::oversampled;
  out.samples.assign(n_sym * sps + taps.size() - 1, Complex{});
  for (std::size_t s = 0; s < n_sym; ++s) {
    const Complex sym = frame.symbols[s];
    Complex* dst = out.samples.data() + s * sps;
    for (std::size_t k = 0; k < taps.size(); ++k) dst[k] += sym * taps[k];
  }
  return out;
}

} // namespace amc::signal

#endif // AMC_SIGNAL_PULSE_HPP
