#ifndef AMC_NN_OPS_HPP
#define AMC_NN_OPS_HPP

// Layer primitives with explicit forward/backward passes. Convolution is
// cross-correlation (no kernel flip) with "same" zero padding; when the total
// padding is odd the extra row/column goes to the bottom/right.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "amc/common.hpp"
#include "amc/nn/tensor.hpp"

namespace amc::nn {

struct ConvSpec {
  int in_channels = 1;
  int out_channels = 1;
  int kernel_h = 3;
  int kernel_w = 3;
  int stride_h = 1;
  int stride_w = 1;
  int groups = 1;

  int in_per_group() const { return in_channels / groups; }
  int out_per_group() const { return out_channels / groups; }
  std::size_t weight_count() const
  {
    return static_cast<std::size_t>(out_channels) * in_per_group() * kernel_h * kernel_w;
  }

  int out_h(int h) const { return (h + stride_h - 1) / stride_h; }
  int out_w(int w) const { return (w + stride_w - 1) / stride_w; }
  int pad_top(int h) const { return std::max((out_h(h) - 1) * stride_h + kernel_h - h, 0) / 2; }
  int pad_left(int w) const { return std::max((out_w(w) - 1) * stride_w + kernel_w - w, 0) / 2; }

  void validate() const
  {
    if (groups < 1) reject("conv groups must be >= 1");
    if (in_channels < 1 || out_channels < 1) reject("conv channel counts must be >= 1");
    if (in_channels % groups != 0 || out_channels % groups != 0)
      reject("conv channels (", in_channels, " -> ", out_channels, ") not divisible by groups ", groups);
    if (kernel_h < 1 || kernel_w < 1 || stride_h < 1 || stride_w < 1) reject("conv kernel and stride must be >= 1");
  }
};

namespace detail {

// Iteration bounds of output rows/cols that read a valid input index for a
// given kernel offset.
struct Span1d {
  int lo;
  int hi;
};

inline Span1d valid_outputs(int out_len, int in_len, int stride, int pad, int k)
{
  // in = o * stride + k - pad must lie in [0, in_len)
  const int num_lo = pad - k;
  int lo = num_lo <= 0 ? 0 : (num_lo + stride - 1) / stride;
  const int num_hi = in_len - 1 + pad - k;
  int hi = num_hi < 0 ? 0 : num_hi / stride + 1;
  lo = std::min(lo, out_len);
  hi = std::clamp(hi, lo, out_len);
  return {lo, hi};
}

template <typename T>
inline T dot(const T* __restrict a, const T* __restrict b, int n)
{
  T acc{};
#pragma omp simd reduction(+ : acc)
  for (int i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
inline T strided_dot(const T* __restrict a, const T* __restrict b, int stride_b, int n)
{
  T acc{};
  for (int i = 0; i < n; ++i) acc += a[i] * b[i * stride_b];
  return acc;
}

// y[0..n) += s * x[0..n)
template <typename T>
inline void axpy(T* __restrict y, const T* __restrict x, T s, int n)
{
#pragma omp simd
  for (int i = 0; i < n; ++i) y[i] += s * x[i];
}

/// Index arithmetic shared by the convolution passes. Stride-1 convolutions
/// with more than one channel per group run as a sum of matrix products over
/// kernel taps on a zero-padded copy of the input: with the input padded to
/// Hp x Wp, output (oy, ox) reads padded (oy + ky, ox + kx), so each tap is a
/// fixed shift of the flattened plane. Outputs are produced on an OH x Wp grid
/// whose extra columns are discarded.
struct ConvGeometry {
  int H, W, OH, OW, pt, pl, icg, ocg, KH, KW, SH, SW;
  std::size_t in_plane, out_plane;

  ConvGeometry(const Shape& x, const ConvSpec& s)
      : H(x.h), W(x.w), OH(s.out_h(x.h)), OW(s.out_w(x.w)), pt(s.pad_top(x.h)), pl(s.pad_left(x.w)),
        icg(s.in_per_group()), ocg(s.out_per_group()), KH(s.kernel_h), KW(s.kernel_w), SH(s.stride_h), SW(s.stride_w),
        in_plane(x.plane()), out_plane(static_cast<std::size_t>(OH) * OW)
  {
  }

  bool pointwise() const { return KH == 1 && KW == 1 && SH == 1 && SW == 1; }
  bool matrix_path() const { return SH == 1 && SW == 1 && (icg > 1 || ocg > 1); }
  int padded_w() const { return OW + KW - 1; }
  int padded_h() const { return OH + KH - 1; }
  std::size_t padded_len() const { return static_cast<std::size_t>(padded_h()) * padded_w() + KW; }
  int grid_cols() const { return OH * padded_w(); }
  std::size_t tap_offset(int ky, int kx) const { return static_cast<std::size_t>(ky) * padded_w() + kx; }
};

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ConstStrided = Eigen::Map<const RowMat<T>, Eigen::Unaligned, Eigen::OuterStride<>>;
template <typename T>
using Strided = Eigen::Map<RowMat<T>, Eigen::Unaligned, Eigen::OuterStride<>>;

template <typename T>
RowMat<T> weight_tap(std::span<const T> w, const ConvGeometry& c, int group, int ky, int kx)
{
  RowMat<T> m(c.ocg, c.icg);
  for (int o = 0; o < c.ocg; ++o)
    for (int i = 0; i < c.icg; ++i)
      m(o, i) = w[((static_cast<std::size_t>(group) * c.ocg + o) * c.icg + i) * c.KH * c.KW + ky * c.KW + kx];
  return m;
}

template <typename T>
void pad_planes(const T* x, const ConvGeometry& c, RowMat<T>& buf)
{
  buf.setZero(c.icg, static_cast<Eigen::Index>(c.padded_len()));
  const int wp = c.padded_w();
  for (int i = 0; i < c.icg; ++i)
    for (int iy = 0; iy < c.H; ++iy) {
      const T* src = x + i * c.in_plane + static_cast<std::size_t>(iy) * c.W;
      std::copy(src, src + c.W, buf.row(i).data() + static_cast<std::size_t>(iy + c.pt) * wp + c.pl);
    }
}

// x, y point at the group's first channel of one sample.
template <typename T>
void conv_forward_matrix(const T* x, T* y, std::span<const T> w, std::span<const T> b, const ConvGeometry& c, int group)
{
  if (c.pointwise()) {
    ConstStrided<T> xm(x, c.icg, static_cast<Eigen::Index>(c.in_plane), Eigen::OuterStride<>(c.in_plane));
    Strided<T> ym(y, c.ocg, static_cast<Eigen::Index>(c.out_plane), Eigen::OuterStride<>(c.out_plane));
    ym.noalias() = weight_tap(w, c, group, 0, 0) * xm;
    for (int o = 0; o < c.ocg; ++o) ym.row(o).array() += b[group * c.ocg + o];
    return;
  }
  RowMat<T> padded;
  pad_planes(x, c, padded);
  const auto len = static_cast<Eigen::Index>(c.padded_len());
  RowMat<T> acc = RowMat<T>::Zero(c.ocg, c.grid_cols());
  for (int ky = 0; ky < c.KH; ++ky)
    for (int kx = 0; kx < c.KW; ++kx) {
      ConstStrided<T> xs(padded.data() + c.tap_offset(ky, kx), c.icg, c.grid_cols(), Eigen::OuterStride<>(len));
      acc.noalias() += weight_tap(w, c, group, ky, kx) * xs;
    }
  for (int o = 0; o < c.ocg; ++o) {
    const T bias = b[group * c.ocg + o];
    for (int oy = 0; oy < c.OH; ++oy) {
      const T* src = acc.row(o).data() + static_cast<std::size_t>(oy) * c.padded_w();
      T* dst = y + o * c.out_plane + static_cast<std::size_t>(oy) * c.OW;
      for (int ox = 0; ox < c.OW; ++ox) dst[ox] = src[ox] + bias;
    }
  }
}

template <typename T>
void conv_backward_matrix(const T* dy, const T* x, std::span<const T> w, T* dx, std::span<T> dw, const ConvGeometry& c,
                          int group)
{
  auto scatter_dw = [&](const RowMat<T>& tap, int ky, int kx) {
    for (int o = 0; o < c.ocg; ++o)
      for (int i = 0; i < c.icg; ++i)
        dw[((static_cast<std::size_t>(group) * c.ocg + o) * c.icg + i) * c.KH * c.KW + ky * c.KW + kx] += tap(o, i);
  };
  if (c.pointwise()) {
    ConstStrided<T> gm(dy, c.ocg, static_cast<Eigen::Index>(c.out_plane), Eigen::OuterStride<>(c.out_plane));
    ConstStrided<T> xm(x, c.icg, static_cast<Eigen::Index>(c.in_plane), Eigen::OuterStride<>(c.in_plane));
    RowMat<T> tap = gm * xm.transpose();
    scatter_dw(tap, 0, 0);
    if (dx) {
      Strided<T> dxm(dx, c.icg, static_cast<Eigen::Index>(c.in_plane), Eigen::OuterStride<>(c.in_plane));
      dxm.noalias() += weight_tap(w, c, group, 0, 0).transpose() * gm;
    }
    return;
  }
  const int wp = c.padded_w();
  const auto len = static_cast<Eigen::Index>(c.padded_len());
  RowMat<T> grid = RowMat<T>::Zero(c.ocg, c.grid_cols());
  for (int o = 0; o < c.ocg; ++o)
    for (int oy = 0; oy < c.OH; ++oy)
      std::copy(dy + o * c.out_plane + static_cast<std::size_t>(oy) * c.OW,
                dy + o * c.out_plane + static_cast<std::size_t>(oy + 1) * c.OW,
                grid.row(o).data() + static_cast<std::size_t>(oy) * wp);
  RowMat<T> padded;
  pad_planes(x, c, padded);
  RowMat<T> dpad;
  if (dx) dpad.setZero(c.icg, len);
  for (int ky = 0; ky < c.KH; ++ky)
    for (int kx = 0; kx < c.KW; ++kx) {
      const std::size_t off = c.tap_offset(ky, kx);
      ConstStrided<T> xs(padded.data() + off, c.icg, c.grid_cols(), Eigen::OuterStride<>(len));
      RowMat<T> tap = grid * xs.transpose();
      scatter_dw(tap, ky, kx);
      if (dx) {
        Strided<T> ds(dpad.data() + off, c.icg, c.grid_cols(), Eigen::OuterStride<>(len));
        ds.noalias() += weight_tap(w, c, group, ky, kx).transpose() * grid;
      }
    }
  if (!dx) return;
  for (int i = 0; i < c.icg; ++i)
    for (int iy = 0; iy < c.H; ++iy) {
      const T* src = dpad.row(i).data() + static_cast<std::size_t>(iy + c.pt) * wp + c.pl;
      T* dst = dx + i * c.in_plane + static_cast<std::size_t>(iy) * c.W;
      for (int ix = 0; ix < c.W; ++ix) dst[ix] += src[ix];
    }
}

// Direct loops; used for depthwise and strided convolutions.
template <typename T>
void conv_forward_direct(const T* x, T* y, std::span<const T> w, std::span<const T> b, const ConvGeometry& c, int group)
{
  for (int ocl = 0; ocl < c.ocg; ++ocl) {
    const int oc = group * c.ocg + ocl;
    T* yp = y + ocl * c.out_plane;
    std::fill(yp, yp + c.out_plane, b[oc]);
    for (int icl = 0; icl < c.icg; ++icl) {
      const T* xp = x + icl * c.in_plane;
      const T* wp = w.data() + (static_cast<std::size_t>(oc) * c.icg + icl) * c.KH * c.KW;
      for (int ky = 0; ky < c.KH; ++ky) {
        const auto rows = valid_outputs(c.OH, c.H, c.SH, c.pt, ky);
        for (int kx = 0; kx < c.KW; ++kx) {
          const T wv = wp[ky * c.KW + kx];
          const auto cols = valid_outputs(c.OW, c.W, c.SW, c.pl, kx);
          const int ncols = cols.hi - cols.lo;
          if (ncols <= 0) continue;
          for (int oy = rows.lo; oy < rows.hi; ++oy) {
            const int iy = oy * c.SH + ky - c.pt;
            T* yrow = yp + oy * c.OW + cols.lo;
            const T* xrow = xp + iy * c.W + cols.lo * c.SW + kx - c.pl;
            if (c.SW == 1) {
              axpy(yrow, xrow, wv, ncols);
            } else {
              for (int i = 0; i < ncols; ++i) yrow[i] += wv * xrow[i * c.SW];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv_backward_direct(const T* dy, const T* x, std::span<const T> w, T* dx, std::span<T> dw, const ConvGeometry& c,
                          int group)
{
  for (int ocl = 0; ocl < c.ocg; ++ocl) {
    const int oc = group * c.ocg + ocl;
    const T* gp = dy + ocl * c.out_plane;
    for (int icl = 0; icl < c.icg; ++icl) {
      const T* xp = x + icl * c.in_plane;
      T* dxp = dx ? dx + icl * c.in_plane : nullptr;
      const std::size_t woff = (static_cast<std::size_t>(oc) * c.icg + icl) * c.KH * c.KW;
      const T* wp = w.data() + woff;
      T* dwp = dw.data() + woff;
      for (int ky = 0; ky < c.KH; ++ky) {
        const auto rows = valid_outputs(c.OH, c.H, c.SH, c.pt, ky);
        for (int kx = 0; kx < c.KW; ++kx) {
          const T wv = wp[ky * c.KW + kx];
          const auto cols = valid_outputs(c.OW, c.W, c.SW, c.pl, kx);
          const int ncols = cols.hi - cols.lo;
          if (ncols <= 0) continue;
          T wacc{};
          for (int oy = rows.lo; oy < rows.hi; ++oy) {
            const int iy = oy * c.SH + ky - c.pt;
            const T* grow = gp + oy * c.OW + cols.lo;
            const std::size_t xoff = static_cast<std::size_t>(iy) * c.W + cols.lo * c.SW + kx - c.pl;
            if (c.SW == 1) {
              wacc += dot(grow, xp + xoff, ncols);
              if (dxp) axpy(dxp + xoff, grow, wv, ncols);
            } else {
              wacc += strided_dot(grow, xp + xoff, c.SW, ncols);
              if (dxp)
                for (int i = 0; i < ncols; ++i) dxp[xoff + i * c.SW] += wv * grow[i];
            }
          }
          dwp[ky * c.KW + kx] += wacc;
        }
      }
    }
  }
}

} // namespace detail

inline void check_conv_input(const Shape& x, const ConvSpec& spec, std::size_t weights, std::size_t bias)
{
  spec.validate();
  if (x.c != spec.in_channels)
    reject("conv2d: input shape ", x.str(), " has ", x.c, " channels, spec expects ", spec.in_channels);
  if (weights != spec.weight_count())
    reject("conv2d: weight count ", weights, " does not match spec (", spec.out_channels, ",", spec.in_per_group(), ",",
           spec.kernel_h, ",", spec.kernel_w, ")");
  if (bias != static_cast<std::size_t>(spec.out_channels))
    reject("conv2d: bias count ", bias, " does not match out_channels ", spec.out_channels);
}

/// Grouped, strided, same-padded cross-correlation. Weights are
/// (out_channels, in_channels / groups, kh, kw). Each sample is computed
/// independently, so results do not depend on batch composition.
template <typename T>
Tensor4<T> conv2d_forward(const Tensor4<T>& x, const ConvSpec& spec, std::span<const T> weights, std::span<const T> bias)
{
  check_conv_input(x.shape, spec, weights.size(), bias.size());
  const detail::ConvGeometry c(x.shape, spec);
  Tensor4<T> y(x.shape.n, spec.out_channels, c.OH, c.OW);
  for (int n = 0; n < x.shape.n; ++n)
    for (int g = 0; g < spec.groups; ++g) {
      const T* xs = x.sample(n) + g * c.icg * c.in_plane;
      T* ys = y.sample(n) + g * c.ocg * c.out_plane;
      if (c.matrix_path())
        detail::conv_forward_matrix(xs, ys, weights, bias, c, g);
      else
        detail::conv_forward_direct(xs, ys, weights, bias, c, g);
    }
  return y;
}

/// Accumulates (+=) convolution gradients into dx, dw and db, which must be
/// pre-sized. dx may be null when the input gradient is not needed.
template <typename T>
void conv2d_backward_accumulate(const Tensor4<T>& dy, const Tensor4<T>& x, const ConvSpec& spec,
                                std::span<const T> weights, Tensor4<T>* dx, std::span<T> dw, std::span<T> db)
{
  const detail::ConvGeometry c(x.shape, spec);
  if (dy.shape != Shape{x.shape.n, spec.out_channels, c.OH, c.OW})
    reject("conv2d_backward: grad shape ", dy.shape.str(), " does not match forward output");
  for (int n = 0; n < x.shape.n; ++n) {
    for (int oc = 0; oc < spec.out_channels; ++oc) {
      const T* gp = dy.sample(n) + oc * c.out_plane;
      T bsum{};
      for (std::size_t i = 0; i < c.out_plane; ++i) bsum += gp[i];
      db[oc] += bsum;
    }
    for (int g = 0; g < spec.groups; ++g) {
      const T* dys = dy.sample(n) + g * c.ocg * c.out_plane;
      const T* xs = x.sample(n) + g * c.icg * c.in_plane;
      T* dxs = dx ? dx->sample(n) + g * c.icg * c.in_plane : nullptr;
      if (c.matrix_path())
        detail::conv_backward_matrix(dys, xs, weights, dxs, dw, c, g);
      else
        detail::conv_backward_direct(dys, xs, weights, dxs, dw, c, g);
    }
  }
}

template <typename T>
struct ConvGrads {
  Tensor4<T> dx;
  std::vector<T> dw;
  std::vector<T> db;
};

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor4<T>& dy, const Tensor4<T>& x, const ConvSpec& spec, std::span<const T> weights)
{
  ConvGrads<T> g{Tensor4<T>(x.shape), std::vector<T>(spec.weight_count()), std::vector<T>(spec.out_channels)};
  conv2d_backward_accumulate<T>(dy, x, spec, weights, &g.dx, g.dw, g.db);
  return g;
}

// Activations. Derivatives at the kinks (x == 0, x == ceiling) are 0.

template <typename T>
Tensor4<T> relu_forward(const Tensor4<T>& x)
{
  Tensor4<T> y(x.shape);
  for (std::size_t i = 0; i < x.data.size(); ++i) y.data[i] = x.data[i] > T{} ? x.data[i] : T{};
  return y;
}

template <typename T>
Tensor4<T> relu_backward(const Tensor4<T>& dy, const Tensor4<T>& x)
{
  Tensor4<T> dx(x.shape);
  for (std::size_t i = 0; i < x.data.size(); ++i) dx.data[i] = x.data[i] > T{} ? dy.data[i] : T{};
  return dx;
}

template <typename T>
Tensor4<T> clipped_relu_forward(const Tensor4<T>& x, T ceiling)
{
  Tensor4<T> y(x.shape);
  for (std::size_t i = 0; i < x.data.size(); ++i) y.data[i] = std::clamp(x.data[i], T{}, ceiling);
  return y;
}

template <typename T>
Tensor4<T> clipped_relu_backward(const Tensor4<T>& dy, const Tensor4<T>& x, T ceiling)
{
  Tensor4<T> dx(x.shape);
  for (std::size_t i = 0; i < x.data.size(); ++i)
    dx.data[i] = (x.data[i] > T{} && x.data[i] < ceiling) ? dy.data[i] : T{};
  return dx;
}

template <typename T>
Tensor4<T> concat_depth(std::span<const Tensor4<T>* const> xs)
{
  if (xs.empty()) reject("concat_depth: no inputs");
  Shape out = xs[0]->shape;
  out.c = 0;
  for (const auto* x : xs) {
    if (x->shape.n != out.n || x->shape.h != out.h || x->shape.w != out.w)
      reject("concat_depth: input ", x->shape.str(), " does not match ", xs[0]->shape.str(), " in N/H/W");
    out.c += x->shape.c;
  }
  Tensor4<T> y(out);
  for (int n = 0; n < out.n; ++n) {
    T* dst = y.sample(n);
    for (const auto* x : xs) {
      const T* src = x->sample(n);
      dst = std::copy(src, src + x->shape.sample_size(), dst);
    }
  }
  return y;
}

template <typename T>
Tensor4<T> concat_depth(const std::vector<Tensor4<T>>& xs)
{
  std::vector<const Tensor4<T>*> ptrs;
  for (const auto& x : xs) ptrs.push_back(&x);
  return concat_depth<T>(std::span<const Tensor4<T>* const>(ptrs));
}

/// Slices the concatenated gradient back into per-input pieces.
template <typename T>
std::vector<Tensor4<T>> concat_depth_backward(const Tensor4<T>& dy, std::span<const int> channels)
{
  std::vector<Tensor4<T>> out;
  int total = 0;
  for (int c : channels) {
    out.emplace_back(dy.shape.n, c, dy.shape.h, dy.shape.w);
    total += c;
  }
  if (total != dy.shape.c) reject("concat_depth_backward: channel split ", total, " != ", dy.shape.c);
  for (int n = 0; n < dy.shape.n; ++n) {
    const T* src = dy.sample(n);
    for (auto& piece : out) {
      const std::size_t len = piece.shape.sample_size();
      std::copy(src, src + len, piece.sample(n));
      src += len;
    }
  }
  return out;
}

template <typename T>
Tensor4<T> add_elementwise(const Tensor4<T>& a, const Tensor4<T>& b)
{
  if (a.shape != b.shape) reject("add_elementwise: shape mismatch ", a.shape.str(), " vs ", b.shape.str());
  Tensor4<T> y(a.shape);
  for (std::size_t i = 0; i < a.data.size(); ++i) y.data[i] = a.data[i] + b.data[i];
  return y;
}

template <typename T>
Tensor4<T> global_avg_pool(const Tensor4<T>& x, int pool_h, int pool_w)
{
  if (x.shape.h != pool_h || x.shape.w != pool_w)
    reject("global_avg_pool: input ", x.shape.str(), " does not match pool window ", pool_h, "x", pool_w);
  Tensor4<T> y(x.shape.n, x.shape.c, 1, 1);
  const std::size_t plane = x.shape.plane();
  for (int n = 0; n < x.shape.n; ++n)
    for (int c = 0; c < x.shape.c; ++c) {
      const T* p = x.sample(n) + c * plane;
      T acc{};
      for (std::size_t i = 0; i < plane; ++i) acc += p[i];
      y(n, c, 0, 0) = acc / static_cast<T>(plane);
    }
  return y;
}

template <typename T>
Tensor4<T> global_avg_pool_backward(const Tensor4<T>& dy, const Shape& input)
{
  Tensor4<T> dx(input);
  const std::size_t plane = input.plane();
  const T scale = T(1) / static_cast<T>(plane);
  for (int n = 0; n < input.n; ++n)
    for (int c = 0; c < input.c; ++c) {
      T* p = dx.sample(n) + c * plane;
      std::fill(p, p + plane, dy(n, c, 0, 0) * scale);
    }
  return dx;
}

/// Affine map on the flattened sample; weights are (out, in) row-major.
/// Output shape is (N, out, 1, 1).
template <typename T>
Tensor4<T> fully_connected(const Tensor4<T>& x, int out_features, std::span<const T> weights, std::span<const T> bias)
{
  const auto in = static_cast<int>(x.shape.sample_size());
  if (weights.size() != static_cast<std::size_t>(out_features) * in)
    reject("fully_connected: input length ", in, " does not match weight matrix (", out_features, " x ",
           out_features ? weights.size() / out_features : 0, ")");
  if (bias.size() != static_cast<std::size_t>(out_features)) reject("fully_connected: bias size mismatch");
  Tensor4<T> y(x.shape.n, out_features, 1, 1);
  for (int n = 0; n < x.shape.n; ++n)
    for (int o = 0; o < out_features; ++o)
      y(n, o, 0, 0) = bias[o] + detail::dot(weights.data() + static_cast<std::size_t>(o) * in, x.sample(n), in);
  return y;
}

template <typename T>
void fully_connected_backward_accumulate(const Tensor4<T>& dy, const Tensor4<T>& x, std::span<const T> weights,
                                         Tensor4<T>* dx, std::span<T> dw, std::span<T> db)
{
  const auto in = static_cast<int>(x.shape.sample_size());
  const int out = dy.shape.c;
  for (int n = 0; n < x.shape.n; ++n)
    for (int o = 0; o < out; ++o) {
      const T g = dy(n, o, 0, 0);
      db[o] += g;
      detail::axpy(dw.data() + static_cast<std::size_t>(o) * in, x.sample(n), g, in);
      if (dx) detail::axpy(dx->sample(n), weights.data() + static_cast<std::size_t>(o) * in, g, in);
    }
}

template <typename T>
std::vector<T> softmax(std::span<const T> logits)
{
  const T peak = *std::max_element(logits.begin(), logits.end());
  std::vector<T> p(logits.size());
  T total{};
  for (std::size_t k = 0; k < logits.size(); ++k) total += p[k] = std::exp(logits[k] - peak);
  for (auto& v : p) v /= total;
  return p;
}

template <typename T>
struct LossAndGrad {
  T loss{};
  Tensor4<T> grad; // d(loss)/d(logits)
};

/// Mean over the batch of -log softmax(logits)[label]; gradient is
/// (p - onehot) / N.
template <typename T>
LossAndGrad<T> softmax_cross_entropy(const Tensor4<T>& logits, std::span<const int> labels)
{
  const int N = logits.shape.n;
  const int K = static_cast<int>(logits.shape.sample_size());
  if (static_cast<int>(labels.size()) != N) reject("softmax_cross_entropy: ", labels.size(), " labels for batch of ", N);
  LossAndGrad<T> out{T{}, Tensor4<T>(logits.shape)};
  for (int n = 0; n < N; ++n) {
    if (labels[n] < 0 || labels[n] >= K) reject("softmax_cross_entropy: label ", labels[n], " outside [0, ", K, ")");
    const std::span<const T> row(logits.sample(n), K);
    const T peak = *std::max_element(row.begin(), row.end());
    T total{};
    for (int k = 0; k < K; ++k) total += std::exp(row[k] - peak);
    const T log_total = std::log(total) + peak;
    out.loss += log_total - row[labels[n]];
    T* g = out.grad.sample(n);
    for (int k = 0; k < K; ++k) g[k] = (std::exp(row[k] - log_total) - (k == labels[n] ? T(1) : T{})) / static_cast<T>(N);
  }
  out.loss /= static_cast<T>(N);
  return out;
}

} // namespace amc::nn

#endif // AMC_NN_OPS_HPP
