#ifndef AMC_SIGNAL_MODULATION_HPP
#define AMC_SIGNAL_MODULATION_HPP

// Unit-power constellation alphabets for the eight supported digital formats
// and i.i.d. symbol frame generation.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "amc/common.hpp"

namespace amc::signal {

enum class ModulationFormat { QPSK, PSK8, PAM4, PAM16, QAM16, QAM64, APSK16, APSK64 };

inline constexpr std::array<ModulationFormat, 8> all_formats = {
    ModulationFormat::QPSK,  ModulationFormat::PSK8,  ModulationFormat::PAM4,   ModulationFormat::PAM16,
    ModulationFormat::QAM16, ModulationFormat::QAM64, ModulationFormat::APSK16, ModulationFormat::APSK64};

constexpr std::string_view format_name(ModulationFormat f)
{
  switch (f) {
  case ModulationFormat::QPSK: return "QPSK";
  case ModulationFormat::PSK8: return "8PSK";
  case ModulationFormat::PAM4: return "4PAM";
  case ModulationFormat::PAM16: return "16PAM";
  case ModulationFormat::QAM16: return "16QAM";
  case ModulationFormat::QAM64: return "64QAM";
  case ModulationFormat::APSK16: return "16APSK";
  case ModulationFormat::APSK64: return "64APSK";
  }
  return "?";
}

inline ModulationFormat parse_format(std::string_view name)
{
  for (auto f : all_formats)
    if (format_name(f) == name) return f;
  reject("unknown modulation format '", name, "' (expected one of QPSK, 8PSK, 4PAM, 16PAM, 16QAM, 64QAM, 16APSK, 64APSK)");
}

constexpr int format_order(ModulationFormat f)
{
  switch (f) {
  case ModulationFormat::QPSK:
  case ModulationFormat::PAM4: return 4;
  case ModulationFormat::PSK8: return 8;
  case ModulationFormat::PAM16:
  case ModulationFormat::QAM16:
  case ModulationFormat::APSK16: return 16;
  case ModulationFormat::QAM64:
  case ModulationFormat::APSK64: return 64;
  }
  return 0;
}

/// Passband carrier parameters. Everything downstream works on the complex
/// envelope, so only the amplitude scales anything; the carrier frequency is
/// carried for provenance.
struct CarrierConvention {
  double amplitude = 1.0;
  double carrier_hz = 0.0;

  void validate() const
  {
    if (!(amplitude > 0.0)) reject("carrier amplitude must be positive, got ", amplitude);
  }
};

struct ApskRingSpec {
  std::vector<double> radii;              // relative, strictly increasing
  std::vector<int> ring_orders;           // points per ring
  std::vector<double> ring_phase_offsets; // radians

  int total_points() const
  {
    int n = 0;
    for (int k : ring_orders) n += k;
    return n;
  }

  void validate() const
  {
    if (radii.empty() || radii.size() != ring_orders.size() || radii.size() != ring_phase_offsets.size())
      reject("APSK ring spec needs equal-length, non-empty radii/orders/offsets");
    for (std::size_t i = 0; i < radii.size(); ++i) {
      if (!(radii[i] > 0.0)) reject("APSK ring radius must be positive");
      if (i > 0 && !(radii[i] > radii[i - 1])) reject("APSK ring radii must be strictly increasing");
      if (ring_orders[i] < 1) reject("APSK ring order must be >= 1");
    }
  }
};

/// DVB-S2(-X) style ring layouts. Radii are relative; the alphabet is power
/// normalized afterwards.
inline ApskRingSpec apsk_ring_spec(ModulationFormat f)
{
  using std::numbers::pi;
  switch (f) {
  case ModulationFormat::APSK16: return {{1.0, 2.57}, {4, 12}, {pi / 4, pi / 12}};
  case ModulationFormat::APSK64: return {{1.0, 2.2, 3.6, 5.2}, {4, 12, 20, 28}, {pi / 4, pi / 12, pi / 20, pi / 28}};
  default: reject("format ", format_name(f), " is not an APSK format");
  }
}

struct Alphabet {
  ModulationFormat format;
  std::vector<Complex> points;

  int order() const { return static_cast<int>(points.size()); }

  double max_radius() const
  {
    double r = 0.0;
    for (const auto& p : points) r = std::max(r, std::abs(p));
    return r;
  }
};

namespace detail {

inline void normalize_unit_power(std::vector<Complex>& pts)
{
  const double scale = 1.0 / std::sqrt(mean_power(pts));
  for (auto& p : pts) p *= scale;
}

inline std::vector<Complex> psk_points(int m, double offset)
{
  std::vector<Complex> pts;
  pts.reserve(m);
  for (int k = 0; k < m; ++k) pts.push_back(std::polar(1.0, offset + 2.0 * std::numbers::pi * k / m));
  return pts;
}

inline std::vector<Complex> pam_points(int m)
{
  std::vector<Complex> pts;
  for (int k = 0; k < m; ++k) pts.emplace_back(2.0 * k - (m - 1), 0.0);
  return pts;
}

inline std::vector<Complex> qam_points(int m)
{
  const int side = static_cast<int>(std::lround(std::sqrt(m)));
  std::vector<Complex> pts;
  for (int q = 0; q < side; ++q)
    for (int i = 0; i < side; ++i) pts.emplace_back(2.0 * i - (side - 1), 2.0 * q - (side - 1));
  return pts;
}

inline std::vector<Complex> apsk_points(const ApskRingSpec& spec)
{
  spec.validate();
  std::vector<Complex> pts;
  for (std::size_t r = 0; r < spec.radii.size(); ++r) {
    const int n = spec.ring_orders[r];
    for (int k = 0; k < n; ++k)
      pts.push_back(std::polar(spec.radii[r], spec.ring_phase_offsets[r] + 2.0 * std::numbers::pi * k / n));
  }
  return pts;
}

} // namespace detail

inline Alphabet build_alphabet(ModulationFormat f)
{
  using std::numbers::pi;
  std::vector<Complex> pts;
  switch (f) {
  case ModulationFormat::QPSK: pts = detail::psk_points(4, pi / 4); break;
  case ModulationFormat::PSK8: pts = detail::psk_points(8, 0.0); break;
  case ModulationFormat::PAM4: pts = detail::pam_points(4); break;
  case ModulationFormat::PAM16: pts = detail::pam_points(16); break;
  case ModulationFormat::QAM16: pts = detail::qam_points(16); break;
  case ModulationFormat::QAM64: pts = detail::qam_points(64); break;
  case ModulationFormat::APSK16:
  case ModulationFormat::APSK64: pts = detail::apsk_points(apsk_ring_spec(f)); break;
  }
  detail::normalize_unit_power(pts);
  return {f, std::move(pts)};
}

inline Alphabet build_alphabet(std::string_view name) { return build_alphabet(parse_format(name)); }

struct SymbolFrame {
  ModulationFormat format;
  std::vector<int> indices;
  std::vector<Complex> symbols;
};

/// i.i.d. uniform symbols; a pure function of (format, count, seed).
inline SymbolFrame draw_symbols(ModulationFormat f, std::size_t count, std::uint64_t seed)
{
  if (count == 0) reject("draw_symbols: count must be >= 1");
  const Alphabet alphabet = build_alphabet(f);
  Rng rng(seed);
  std::uniform_int_distribution<int> pick(0, alphabet.order() - 1);
  SymbolFrame frame{f, {}, {}};
  frame.indices.reserve(count);
  frame.symbols.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const int idx = pick(rng);
    frame.indices.push_back(idx);
    frame.symbols.push_back(alphabet.points[idx]);
  }
  return frame;
}

} // namespace amc::signal

#endif // AMC_SIGNAL_MODULATION_HPP
