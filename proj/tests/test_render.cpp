#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "amc/amc.hpp"
#include "oracles.hpp"

using namespace amc;
using namespace amc::render;

namespace {

/// Coordinates of the centre of pixel (row, col).
Complex pixel_centre(int row, int col, const RenderConfig& c)
{
  const double cell = 2 * c.extent / c.image_size;
  return {-c.extent + (col + 0.5) * cell, c.extent - (row + 0.5) * cell};
}

std::vector<Complex> random_cloud(std::size_t n, std::uint64_t seed, double spread)
{
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, spread);
  std::vector<Complex> pts;
  for (std::size_t i = 0; i < n; ++i) pts.emplace_back(g(rng), g(rng));
  return pts;
}

} // namespace

TEST(SymbolPoints, IdentityChannelQpskRoundTrip)
{
  const signal::PulseShape shape;
  const auto sym = signal::draw_symbols(signal::ModulationFormat::QPSK, 1000, 4);
  const auto pts = to_symbol_points(signal::pulse_shape(sym, shape), shape);
  ASSERT_EQ(pts.count(), 1000u);
  const auto alphabet = signal::build_alphabet(signal::ModulationFormat::QPSK);
  for (std::size_t i = 0; i < pts.count(); ++i) {
    double best = 1e9;
    for (const auto& a : alphabet.points) best = std::min(best, std::abs(pts.points[i] - a));
    EXPECT_LT(best, 1e-3) << i;
    EXPECT_LT(std::abs(pts.points[i] - sym.symbols[i]), 1e-3) << i;
  }
}

TEST(SymbolPoints, ShortFrameRejected)
{
  const signal::PulseShape shape;
  signal::IqFrame f;
  f.samples.assign(64, Complex(1, 0));
  EXPECT_THROW(to_symbol_points(f, shape), std::invalid_argument);
}

TEST(SymbolPoints, NormalizePower)
{
  SymbolPoints p{{Complex(2, 0), Complex(0, 2)}};
  const auto n = normalize_power(p);
  EXPECT_NEAR(mean_power(n.points), 1.0, 1e-15);
  EXPECT_THROW(normalize_power(SymbolPoints{{Complex{}, Complex{}}}), std::invalid_argument);
}

TEST(Render, SinglePointAtPixelCentre)
{
  // scale the extent so the centre of pixel (4, 11) has unit power
  const RenderConfig base{20, 0.5, 2.0};
  const RenderConfig c{20, 0.5, 2.0 / std::abs(pixel_centre(4, 11, base))};
  const Complex p = pixel_centre(4, 11, c);
  ASSERT_NEAR(std::norm(p), 1.0, 1e-12);
  const auto raw = render_raw({{p}}, c);
  for (int row = 0; row < 20; ++row)
    for (int col = 0; col < 20; ++col)
      EXPECT_NEAR(raw[row * 20 + col], (row == 4 && col == 11) ? 1.0 : 0.0, 1e-12);
}

TEST(Render, PowersOneAndFourAtCentre)
{
  // pixel (0, 0) of an 8x8 grid over [-R, R]^2 is centred at (-7R/8, 7R/8)
  const double r1 = 8.0 / (7.0 * std::sqrt(2.0));
  const RenderConfig g1{8, 0.5, r1};
  const RenderConfig g4{8, 0.5, 2.0 * r1};
  const Complex c1 = pixel_centre(0, 0, g1);
  const Complex c4 = pixel_centre(0, 0, g4);
  ASSERT_NEAR(std::norm(c1), 1.0, 1e-12);
  ASSERT_NEAR(std::norm(c4), 4.0, 1e-12);
  EXPECT_NEAR(render_raw({{c1}}, g1)[0], 1.0, 1e-12);
  EXPECT_NEAR(render_raw({{c4}}, g4)[0], 4.0, 1e-12);
  EXPECT_NEAR(render_raw({{c4, c4}}, g4)[0], 4.0, 1e-12);
  // second point in the same pixel, a quarter cell towards the origin on each axis
  const double cell = 2.0 * g4.extent / 8.0;
  const Complex q = c4 + Complex(0.25 * cell, -0.25 * cell);
  const double d = std::hypot(0.25, 0.25); // cells from the centre
  const double expect = (4.0 + std::norm(q) * std::exp(-0.5 * d)) / 2.0;
  EXPECT_NEAR(render_raw({{c4, q}}, g4)[0], expect, 1e-12);
}

TEST(Render, MatchesBruteForceOracle)
{
  for (int trial = 0; trial < 10; ++trial) {
    const RenderConfig c{40, 0.5, 2.0};
    const auto pts = random_cloud(500, 100 + trial, 0.9);
    const auto fast = render_raw({pts}, c);
    const auto ref = oracle::render_raw(pts, c.image_size, c.extent, c.decay_mu);
    double worst = 0.0;
    for (std::size_t i = 0; i < fast.size(); ++i) worst = std::max(worst, std::abs(fast[i] - ref[i]));
    EXPECT_LE(worst, 1e-9) << "trial " << trial;
  }
}

TEST(Render, OutOfRangeClippedToBorder)
{
  const RenderConfig c{10, 0.5, 1.0};
  const auto raw = render_raw({{Complex(5.0, 0.05)}}, c);
  int lit = -1;
  for (int j = 0; j < 100; ++j)
    if (raw[j] > 0) lit = j;
  EXPECT_EQ(lit % 10, 9); // right-most column
  EXPECT_EQ(lit / 10, 4);
  const auto ref = oracle::render_raw({Complex(5.0, 0.05)}, 10, 1.0, 0.5);
  EXPECT_NEAR(raw[lit], ref[lit], 1e-12);
}

TEST(Render, NormalizedToUnitMax)
{
  const RenderConfig c{32, 0.5, 2.0};
  const auto img = render::render({random_cloud(300, 5, 0.7)}, c);
  double peak = 0.0;
  for (double v : img.pixels) {
    EXPECT_GE(v, 0.0);
    peak = std::max(peak, v);
  }
  EXPECT_DOUBLE_EQ(peak, 1.0);
  EXPECT_EQ(img.provenance.pixel_average, "per-pixel");
  EXPECT_EQ(img.provenance.point_count, 300u);
}

TEST(Render, PointOrderDoesNotMatter)
{
  const RenderConfig c{24, 0.5, 2.0};
  auto pts = random_cloud(200, 6, 0.8);
  const auto a = render_raw({pts}, c);
  std::reverse(pts.begin(), pts.end());
  const auto b = render_raw({pts}, c);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(Render, RejectsBadConfigAndEmptyInput)
{
  EXPECT_THROW(render_raw({{Complex(0, 0)}}, RenderConfig{4, 0.5, 1.0}), std::invalid_argument);
  EXPECT_THROW(render_raw({{Complex(0, 0)}}, RenderConfig{16, 0.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(render_raw({{}}, RenderConfig{16, 0.5, 1.0}), std::invalid_argument);
  EXPECT_THROW(render_raw({{Complex(NAN, 0)}}, RenderConfig{16, 0.5, 1.0}), std::invalid_argument);
}

TEST(Render, DefaultExtent)
{
  const std::vector<signal::ModulationFormat> desk{signal::ModulationFormat::QPSK, signal::ModulationFormat::PSK8,
                                                   signal::ModulationFormat::PAM4, signal::ModulationFormat::QAM16};
  // largest radius among these is the 16QAM corner, 3 sqrt(2) / sqrt(10)
  EXPECT_NEAR(default_extent(desk), 1.5 * 3 * std::sqrt(2.0) / std::sqrt(10.0), 1e-12);
}

TEST(Quantize, EndpointsAndHalf)
{
  EXPECT_EQ(quantize_pixel(0.0), 0);
  EXPECT_EQ(quantize_pixel(1.0), 255);
  EXPECT_EQ(quantize_pixel(0.5), 128);
  EXPECT_THROW(quantize_pixel(1.01), std::invalid_argument);
  EXPECT_THROW(quantize_pixel(-0.01), std::invalid_argument);
}

TEST(Pgm, RoundTrip)
{
  GrayImage img{5, 3, {}};
  for (int i = 0; i < 15; ++i) img.pixels.push_back(static_cast<std::uint8_t>(i * 17));
  const auto bytes = encode_pgm(img);
  EXPECT_EQ(bytes.substr(0, 3), "P5\n");
  EXPECT_EQ(decode_pgm(bytes), img);
}

TEST(Pgm, HeaderWithComment)
{
  const std::string bytes = std::string("P5\n# a comment\n2 1\n255\n") + '\x07' + '\xff';
  const auto img = decode_pgm(bytes);
  EXPECT_EQ(img.width, 2);
  EXPECT_EQ(img.pixels, (std::vector<std::uint8_t>{7, 255}));
}

TEST(Pgm, DistinctErrors)
{
  auto message = [](const std::string& b) {
    try {
      decode_pgm(b);
    } catch (const PgmError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  const std::string wrong_magic = message("P2\n1 1\n255\n\x01");
  const std::string bad_max = message("P5\n1 1\n65535\n\x01\x01");
  const std::string truncated = message("P5\n2 2\n255\n\x01");
  const std::string header = message("P5\nx 1\n255\n\x01");
  const std::string trailing = message(std::string("P5\n1 1\n255\n\x01\x02"));
  EXPECT_NE(wrong_magic, "no error");
  EXPECT_NE(bad_max, "no error");
  EXPECT_NE(truncated, "no error");
  EXPECT_NE(header, "no error");
  EXPECT_NE(trailing, "no error");
  const std::set<std::string> distinct{wrong_magic, bad_max, truncated, header, trailing};
  EXPECT_EQ(distinct.size(), 5u);
}
