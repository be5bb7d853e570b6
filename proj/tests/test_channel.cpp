#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "amc/amc.hpp"
#include "oracles.hpp"

using namespace amc;
using namespace amc::channel;
using amc::signal::IqFrame;

namespace {

IqFrame random_frame(std::size_t n, std::uint64_t seed, double rate = 8 * 3.84e6)
{
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  IqFrame f;
  f.sample_rate = rate;
  for (std::size_t i = 0; i < n; ++i) f.samples.emplace_back(g(rng), g(rng));
  return f;
}

double mean_tap_power(std::size_t path, int draws)
{
  const auto prof = ChannelProfile::pedestrian_a();
  double acc = 0.0;
  for (int d = 0; d < draws; ++d) acc += std::norm(draw_channel(prof, mix_seed(777, d)).taps[path]);
  return acc / draws;
}

} // namespace

TEST(Profile, PedestrianA)
{
  const auto p = ChannelProfile::pedestrian_a();
  EXPECT_EQ(p.path_delays_ns, (std::vector<double>{0, 110, 190, 410}));
  EXPECT_EQ(p.avg_path_gains_db, (std::vector<double>{0, -9.7, -19.2, -22.8}));
  EXPECT_NO_THROW(p.validate());
  EXPECT_THROW((ChannelProfile{{0, 10}, {0}}.validate()), std::invalid_argument);
  EXPECT_THROW((ChannelProfile{{5}, {0}}.validate()), std::invalid_argument);
  EXPECT_THROW((ChannelProfile{{0}, {3}}.validate()), std::invalid_argument);
}

TEST(DrawChannel, PathZeroMeanPower)
{
  EXPECT_NEAR(mean_tap_power(0, 100000), 1.0, 0.02);
}

TEST(DrawChannel, PathOneMeanPower)
{
  const double expect = std::pow(10.0, -0.97);
  EXPECT_NEAR(mean_tap_power(1, 100000), expect, 0.03 * expect);
}

TEST(DrawChannel, Deterministic)
{
  const auto p = ChannelProfile::pedestrian_a();
  EXPECT_EQ(draw_channel(p, 5).taps, draw_channel(p, 5).taps);
  EXPECT_NE(draw_channel(p, 5).taps, draw_channel(p, 6).taps);
}

TEST(DrawChannel, TapsAreCircular)
{
  // Real and imaginary parts each carry half the power; phase is uniform.
  const auto p = ChannelProfile::pedestrian_a();
  double re2 = 0.0, im2 = 0.0, cross = 0.0;
  const int n = 50000;
  for (int d = 0; d < n; ++d) {
    const auto t = draw_channel(p, mix_seed(99, d)).taps[0];
    re2 += t.real() * t.real();
    im2 += t.imag() * t.imag();
    cross += t.real() * t.imag();
  }
  EXPECT_NEAR(re2 / n, 0.5, 0.02);
  EXPECT_NEAR(im2 / n, 0.5, 0.02);
  EXPECT_NEAR(cross / n, 0.0, 0.02);
}

TEST(Multipath, IdentityChannel)
{
  const auto p = ChannelProfile::pedestrian_a();
  const auto x = random_frame(2000, 1);
  const auto y = apply_multipath(x, {{1.0, 0.0, 0.0, 0.0}, 0}, p);
  for (std::size_t i = 0; i < x.samples.size(); ++i) EXPECT_LT(std::abs(y.samples[i] - x.samples[i]), 1e-9);
}

TEST(Multipath, ScalarChannel)
{
  const auto p = ChannelProfile::pedestrian_a();
  const auto x = random_frame(500, 2);
  const auto y = apply_multipath(x, {{0.5, 0.0, 0.0, 0.0}, 0}, p);
  for (std::size_t i = 0; i < x.samples.size(); ++i) EXPECT_EQ(y.samples[i], 0.5 * x.samples[i]);
}

TEST(Multipath, IntegerDelaysMatchShiftedSum)
{
  // 1 GHz sampling makes every delay (in ns) an integer sample count.
  const ChannelProfile p{{0.0, 7.0, 13.0}, {0.0, -3.0, -6.0}};
  const auto x = random_frame(300, 3, 1e9);
  const ChannelRealization h{{Complex(0.8, -0.1), Complex(-0.3, 0.4), Complex(0.05, 0.2)}, 0};
  const auto y = apply_multipath(x, h, p);
  const auto ref = oracle::shifted_sum(x.samples, h.taps, {0, 7, 13});
  for (std::size_t i = 0; i < x.samples.size(); ++i) EXPECT_LT(std::abs(y.samples[i] - ref[i]), 1e-12) << i;
}

TEST(Multipath, FractionalDelayOfSmoothSignal)
{
  // A slow complex tone delayed by a non-integer amount is a phase rotation.
  const double rate = 8 * 3.84e6;
  const double f0 = 0.01 * rate;
  IqFrame x;
  x.sample_rate = rate;
  for (int i = 0; i < 4000; ++i) x.samples.push_back(std::polar(1.0, 2 * std::numbers::pi * f0 * i / rate));
  const ChannelProfile p{{0.0, 110.0}, {0.0, 0.0}};
  const auto y = apply_multipath(x, {{0.0, 1.0}, 0}, p);
  const double d = 110e-9 * rate; // 3.3792 samples
  for (int i = 200; i < 3800; ++i) {
    const Complex expect = std::polar(1.0, 2 * std::numbers::pi * f0 * (i - d) / rate);
    EXPECT_LT(std::abs(y.samples[i] - expect), 1e-3) << i;
  }
}

TEST(Multipath, Rejections)
{
  const auto p = ChannelProfile::pedestrian_a();
  const auto short_frame = random_frame(4, 4); // 4 samples at 30.72 MHz = 130 ns
  EXPECT_THROW(apply_multipath(short_frame, {{1, 0, 0, 0}, 0}, p), std::invalid_argument);
  const auto x = random_frame(1000, 4);
  EXPECT_THROW(apply_multipath(x, {{1, 0}, 0}, p), std::invalid_argument);
  auto sym = x;
  sym.origin = signal::SampleOrigin::symbol_spaced;
  EXPECT_THROW(apply_multipath(sym, {{1, 0, 0, 0}, 0}, p), std::invalid_argument);
}

TEST(Awgn, ZeroDbEqualPowers)
{
  const auto x = random_frame(100000, 5);
  const auto y = add_awgn(x, {0.0}, 6);
  double ps = 0.0, pn = 0.0;
  for (std::size_t i = 0; i < x.samples.size(); ++i) {
    ps += std::norm(x.samples[i]);
    pn += std::norm(y.samples[i] - x.samples[i]);
  }
  EXPECT_NEAR(pn / ps, 1.0, 0.02);
}

TEST(Awgn, ThirtyDb)
{
  const auto x = random_frame(200000, 7);
  const auto y = add_awgn(x, {30.0}, 8);
  double ps = 0.0, pn = 0.0;
  for (std::size_t i = 0; i < x.samples.size(); ++i) {
    ps += std::norm(x.samples[i]);
    pn += std::norm(y.samples[i] - x.samples[i]);
  }
  EXPECT_NEAR(10 * std::log10(pn / ps), -30.0, 0.1);
}

TEST(Awgn, MinusTwentyDbOnMillionSamples)
{
  const auto x = random_frame(1000000, 9);
  EXPECT_NEAR(measure_snr(x, add_awgn(x, {-20.0}, 10)), -20.0, 0.1);
}

TEST(Awgn, Rejections)
{
  IqFrame zero;
  zero.samples.assign(100, Complex{});
  EXPECT_THROW(add_awgn(zero, {10.0}, 1), std::invalid_argument);
  const auto x = random_frame(100, 1);
  EXPECT_THROW(add_awgn(x, {31.0}, 1), std::invalid_argument);
  EXPECT_THROW(add_awgn(x, {-21.0}, 1), std::invalid_argument);
}

TEST(MeasureSnr, Sentinels)
{
  const auto x = random_frame(1000, 11);
  EXPECT_EQ(measure_snr(x, x), std::numeric_limits<double>::infinity());
  EXPECT_THROW(measure_snr(x, random_frame(999, 1)), std::invalid_argument);
  // power-matched independent noise
  const auto n = random_frame(100000, 12);
  auto clean = random_frame(100000, 13);
  IqFrame noisy = clean;
  for (std::size_t i = 0; i < clean.samples.size(); ++i) noisy.samples[i] += n.samples[i];
  EXPECT_NEAR(measure_snr(clean, noisy), 0.0, 0.1);
}

TEST(MeasureSnr, ChainCalibration)
{
  const signal::PulseShape shape;
  const auto prof = ChannelProfile::pedestrian_a();
  for (double snr = -20; snr <= 30; snr += 10) {
    const auto sym = signal::draw_symbols(signal::ModulationFormat::QAM16, 20000, 1);
    const auto faded = apply_multipath(signal::pulse_shape(sym, shape), draw_channel(prof, 2), prof);
    EXPECT_NEAR(measure_snr(faded, add_awgn(faded, {snr}, 3)), snr, 0.1) << snr;
  }
}
