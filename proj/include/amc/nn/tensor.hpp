#ifndef AMC_NN_TENSOR_HPP
#define AMC_NN_TENSOR_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "amc/common.hpp"

namespace amc::nn {

/// N x C x H x W, row-major with W fastest.
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t size() const { return static_cast<std::size_t>(n) * c * h * w; }
  std::size_t sample_size() const { return static_cast<std::size_t>(c) * h * w; }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }

  bool operator==(const Shape&) const = default;

  std::string str() const
  {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," + std::to_string(w) + ")";
  }
};

template <typename T>
struct Tensor4 {
  Shape shape;
  std::vector<T> data;

  Tensor4() = default;
  explicit Tensor4(Shape s, T fill = T{}) : shape(s), data(s.size(), fill) {}
  Tensor4(int n, int c, int h, int w, T fill = T{}) : Tensor4(Shape{n, c, h, w}, fill) {}

  T& operator()(int n, int c, int h, int w) { return data[index(n, c, h, w)]; }
  const T& operator()(int n, int c, int h, int w) const { return data[index(n, c, h, w)]; }

  std::size_t index(int n, int c, int h, int w) const
  {
    return ((static_cast<std::size_t>(n) * shape.c + c) * shape.h + h) * shape.w + w;
  }

  T* sample(int n) { return data.data() + n * shape.sample_size(); }
  const T* sample(int n) const { return data.data() + n * shape.sample_size(); }

  bool all_finite() const
  {
    for (const T& v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  void reset(Shape s)
  {
    shape = s;
    data.assign(s.size(), T{});
  }
};

} // namespace amc::nn

#endif // AMC_NN_TENSOR_HPP
