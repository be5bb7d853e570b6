#ifndef AMC_TESTS_ORACLES_HPP
#define AMC_TESTS_ORACLES_HPP

// Independent reference implementations used by the unit tests and the
// acceptance suite. Deliberately naive; none of them call into the code
// they check beyond plain data types.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "amc/amc.hpp"

namespace oracle {

using amc::Complex;
using amc::nn::ConvSpec;
using amc::nn::Tensor4;

// ---- convolution ------------------------------------------------------------

/// Same-padded grouped cross-correlation, six nested loops over
/// (n, oc, oy, ox, ic, ky, kx). Extra padding goes bottom/right.
inline Tensor4<double> conv2d(const Tensor4<double>& x, const ConvSpec& s, const std::vector<double>& w,
                              const std::vector<double>& b)
{
  const int H = x.shape.h, W = x.shape.w;
  const int OH = (H + s.stride_h - 1) / s.stride_h;
  const int OW = (W + s.stride_w - 1) / s.stride_w;
  const int pad_h_total = std::max((OH - 1) * s.stride_h + s.kernel_h - H, 0);
  const int pad_w_total = std::max((OW - 1) * s.stride_w + s.kernel_w - W, 0);
  const int top = pad_h_total / 2, left = pad_w_total / 2;
  const int icg = s.in_channels / s.groups, ocg = s.out_channels / s.groups;
  Tensor4<double> y(x.shape.n, s.out_channels, OH, OW);
  for (int n = 0; n < x.shape.n; ++n)
    for (int oc = 0; oc < s.out_channels; ++oc) {
      const int g = oc / ocg;
      for (int oy = 0; oy < OH; ++oy)
        for (int ox = 0; ox < OW; ++ox) {
          double acc = b[oc];
          for (int ic = 0; ic < icg; ++ic)
            for (int ky = 0; ky < s.kernel_h; ++ky)
              for (int kx = 0; kx < s.kernel_w; ++kx) {
                const int iy = oy * s.stride_h + ky - top;
                const int ix = ox * s.stride_w + kx - left;
                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                const double wv = w[((static_cast<std::size_t>(oc) * icg + ic) * s.kernel_h + ky) * s.kernel_w + kx];
                acc += wv * x(n, g * icg + ic, iy, ix);
              }
          y(n, oc, oy, ox) = acc;
        }
    }
  return y;
}

// ---- renderer ---------------------------------------------------------------

/// Pixel value before max-normalization, evaluated pixel by pixel: each pixel
/// scans every point and keeps those whose (clipped) coordinates fall inside
/// its square.
inline std::vector<double> render_raw(const std::vector<Complex>& pts, int size, double extent, double mu)
{
  const double cell = 2.0 * extent / size;
  std::vector<double> out(static_cast<std::size_t>(size) * size, 0.0);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      const double left = -extent + c * cell;
      const double right = left + cell;
      const double top = extent - r * cell;
      const double bottom = top - cell;
      double sum = 0.0;
      int k = 0;
      for (const auto& p : pts) {
        const double i = std::clamp(p.real(), -extent, extent);
        const double q = std::clamp(p.imag(), -extent, extent);
        const bool in_col = (i >= left && i < right) || (c == size - 1 && i >= right);
        const bool in_row = (q <= top && q > bottom) || (r == size - 1 && q <= bottom);
        if (!in_col || !in_row) continue;
        const double px = (i + extent) / cell - (c + 0.5);
        const double py = (extent - q) / cell - (r + 0.5);
        sum += std::norm(p) * std::exp(-mu * std::sqrt(px * px + py * py));
        ++k;
      }
      out[static_cast<std::size_t>(r) * size + c] = k ? sum / k : 0.0;
    }
  return out;
}

// ---- channel ----------------------------------------------------------------

/// y[i] = sum_k h_k x[i - d_k] for integer sample delays.
inline std::vector<Complex> shifted_sum(const std::vector<Complex>& x, const std::vector<Complex>& taps,
                                        const std::vector<int>& delays)
{
  std::vector<Complex> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t k = 0; k < taps.size(); ++k) {
      const long src = static_cast<long>(i) - delays[k];
      if (src >= 0) y[i] += taps[k] * x[static_cast<std::size_t>(src)];
    }
  return y;
}

// ---- finite differences -----------------------------------------------------

/// max |a - n| / max(max |a|, max |n|): scale-aware relative error of an
/// analytic gradient against a numeric one.
inline double relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric)
{
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
  }
  return scale > 0.0 ? diff / scale : diff;
}

/// Central difference of f with respect to v[i], step h.
inline double central_difference(const std::function<double()>& f, double& v, double h = 1e-5)
{
  const double keep = v;
  v = keep + h;
  const double up = f();
  v = keep - h;
  const double down = f();
  v = keep;
  return (up - down) / (2.0 * h);
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double scale = 1.0)
{
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

inline Tensor4<double> random_tensor(amc::nn::Shape s, std::mt19937_64& rng, double scale = 1.0)
{
  Tensor4<double> t(s);
  t.data = random_vector(s.size(), rng, scale);
  return t;
}

inline double weighted_sum(const Tensor4<double>& y, const Tensor4<double>& weights)
{
  double acc = 0.0;
  for (std::size_t i = 0; i < y.data.size(); ++i) acc += y.data[i] * weights.data[i];
  return acc;
}

/// Result of one gradient check: the worst relative error over every
/// differentiable input (data, weights, biases).
struct GradCheck {
  std::string name;
  double error = 0.0;
};

/// Numeric gradient of `loss` w.r.t. every entry of `values`.
inline std::vector<double> numeric_gradient(std::vector<double>& values, const std::function<double()>& loss)
{
  std::vector<double> g(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) g[i] = central_difference(loss, values[i]);
  return g;
}

} // namespace oracle

#endif // AMC_TESTS_ORACLES_HPP
