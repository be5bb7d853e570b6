#ifndef AMC_NN_GRAPH_HPP
#define AMC_NN_GRAPH_HPP

// A static DAG of layers with named parameters. The graph owns the
// parameters; a Workspace owns the activations of one forward/backward pass,
// so a frozen graph can serve several workspaces at once.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "amc/common.hpp"
#include "amc/nn/ops.hpp"
#include "amc/nn/tensor.hpp"

namespace amc::nn {

enum class LayerKind { input, conv, relu, clipped_relu, concat, add, global_avg_pool, fully_connected };

inline const char* layer_kind_name(LayerKind k)
{
  switch (k) {
  case LayerKind::input: return "input";
  case LayerKind::conv: return "conv";
  case LayerKind::relu: return "relu";
  case LayerKind::clipped_relu: return "clipped_relu";
  case LayerKind::concat: return "concat";
  case LayerKind::add: return "add";
  case LayerKind::global_avg_pool: return "avgpool";
  case LayerKind::fully_connected: return "fc";
  }
  return "?";
}

struct ActivationSpec {
  enum class Kind { relu, clipped_relu } kind = Kind::relu;
  double ceiling = 6.0;

  void validate() const
  {
    if (kind == Kind::clipped_relu && !(ceiling > 0.0)) reject("clipped ReLU ceiling must be positive");
  }
};

struct LayerNode {
  std::string name;
  LayerKind kind = LayerKind::input;
  std::vector<int> inputs;
  Shape out; // n is always 1 here; batch size is a runtime property
  ConvSpec conv{};
  double ceiling = 0.0;
  int weight = -1; // parameter indices
  int bias = -1;
};

template <typename T>
struct Parameter {
  std::string name;
  std::vector<int> dims;
  std::vector<T> value;
  std::size_t fan_in = 1;
};

template <typename T>
class LayerGraph {
public:
  int add_input(const std::string& name, int c, int h, int w)
  {
    if (!nodes_.empty()) reject("input layer must be the first node");
    if (c < 1 || h < 1 || w < 1) reject("input dims must be positive");
    return push({name, LayerKind::input, {}, {1, c, h, w}});
  }

  int add_conv(const std::string& name, int input, const ConvSpec& spec)
  {
    const Shape& in = node(input).out;
    spec.validate();
    if (in.c != spec.in_channels)
      reject("conv '", name, "': input '", node(input).name, "' has ", in.c, " channels, spec expects ", spec.in_channels);
    LayerNode n{name, LayerKind::conv, {input}, {1, spec.out_channels, spec.out_h(in.h), spec.out_w(in.w)}};
    n.conv = spec;
    n.weight = add_param(name + ".weight", {spec.out_channels, spec.in_per_group(), spec.kernel_h, spec.kernel_w},
                         static_cast<std::size_t>(spec.in_per_group()) * spec.kernel_h * spec.kernel_w);
    n.bias = add_param(name + ".bias", {spec.out_channels}, 1);
    return push(std::move(n));
  }

  int add_activation(const std::string& name, int input, const ActivationSpec& act)
  {
    act.validate();
    if (act.kind == ActivationSpec::Kind::relu) return push({name, LayerKind::relu, {input}, node(input).out});
    LayerNode n{name, LayerKind::clipped_relu, {input}, node(input).out};
    n.ceiling = act.ceiling;
    return push(std::move(n));
  }

  int add_relu(const std::string& name, int input) { return add_activation(name, input, {}); }

  int add_clipped_relu(const std::string& name, int input, double ceiling)
  {
    return add_activation(name, input, {ActivationSpec::Kind::clipped_relu, ceiling});
  }

  int add_concat(const std::string& name, const std::vector<int>& inputs)
  {
    if (inputs.empty()) reject("concat '", name, "' needs inputs");
    Shape out = node(inputs[0]).out;
    out.c = 0;
    for (int i : inputs) {
      const Shape& s = node(i).out;
      if (s.h != out.h || s.w != out.w)
        reject("concat '", name, "': input '", node(i).name, "' ", s.str(), " spatially mismatches ", node(inputs[0]).out.str());
      out.c += s.c;
    }
    return push({name, LayerKind::concat, inputs, out});
  }

  int add_add(const std::string& name, int a, int b)
  {
    if (node(a).out != node(b).out)
      reject("add '", name, "': operand shapes differ: ", node(a).out.str(), " vs ", node(b).out.str());
    return push({name, LayerKind::add, {a, b}, node(a).out});
  }

  int add_global_avg_pool(const std::string& name, int input, int pool_h, int pool_w)
  {
    const Shape& in = node(input).out;
    if (in.h != pool_h || in.w != pool_w)
      reject("avgpool '", name, "': input ", in.str(), " does not match pool window ", pool_h, "x", pool_w);
    return push({name, LayerKind::global_avg_pool, {input}, {1, in.c, 1, 1}});
  }

  int add_fully_connected(const std::string& name, int input, int out_features)
  {
    if (out_features < 1) reject("fc '", name, "' needs >= 1 output");
    const auto in = static_cast<int>(node(input).out.sample_size());
    LayerNode n{name, LayerKind::fully_connected, {input}, {1, out_features, 1, 1}};
    n.weight = add_param(name + ".weight", {out_features, in}, static_cast<std::size_t>(in));
    n.bias = add_param(name + ".bias", {out_features}, 1);
    return push(std::move(n));
  }

  const std::vector<LayerNode>& nodes() const { return nodes_; }
  const LayerNode& node(int i) const
  {
    if (i < 0 || i >= static_cast<int>(nodes_.size())) reject("node index ", i, " out of range");
    return nodes_[i];
  }
  std::optional<int> find(const std::string& name) const
  {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<Parameter<T>>& params() { return params_; }
  const std::vector<Parameter<T>>& params() const { return params_; }

  int output() const { return static_cast<int>(nodes_.size()) - 1; }
  const Shape& input_shape() const { return node(0).out; }

  std::size_t param_count() const
  {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  /// Every node must feed the output (so every parameter receives a gradient).
  void validate() const
  {
    if (nodes_.empty() || nodes_[0].kind != LayerKind::input) reject("graph has no input layer");
    std::vector<bool> live(nodes_.size(), false);
    live.back() = true;
    for (int i = output(); i >= 0; --i)
      if (live[i])
        for (int j : nodes_[i].inputs) live[j] = true;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (!live[i]) reject("layer '", nodes_[i].name, "' does not reach the graph output");
  }

  /// Kaiming-normal weights (std = sqrt(2 / fan_in)), zero biases.
  void init_weights(std::uint64_t seed)
  {
    Rng rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& p : params_) {
      const bool is_bias = p.dims.size() == 1;
      const double sd = std::sqrt(2.0 / static_cast<double>(p.fan_in));
      for (auto& v : p.value) v = is_bias ? T{} : static_cast<T>(sd * gauss(rng));
    }
  }

  template <typename U>
  void copy_params_from(const LayerGraph<U>& other)
  {
    if (other.params().size() != params_.size()) reject("parameter layout mismatch");
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const auto& src = other.params()[i];
      if (src.dims != params_[i].dims || src.name != params_[i].name) reject("parameter '", src.name, "' layout mismatch");
      std::transform(src.value.begin(), src.value.end(), params_[i].value.begin(), [](U v) { return static_cast<T>(v); });
    }
  }

private:
  int push(LayerNode n)
  {
    if (n.name.empty()) reject("layer name must be non-empty");
    if (index_.count(n.name)) reject("duplicate layer name '", n.name, "'");
    for (int i : n.inputs) node(i);
    const int id = static_cast<int>(nodes_.size());
    index_[n.name] = id;
    nodes_.push_back(std::move(n));
    return id;
  }

  int add_param(const std::string& name, std::vector<int> dims, std::size_t fan_in)
  {
    std::size_t count = 1;
    for (int d : dims) count *= static_cast<std::size_t>(d);
    params_.push_back({name, std::move(dims), std::vector<T>(count), fan_in});
    return static_cast<int>(params_.size()) - 1;
  }

  std::vector<LayerNode> nodes_;
  std::vector<Parameter<T>> params_;
  std::map<std::string, int> index_;
};

template <typename T>
struct Gradients {
  std::vector<std::vector<T>> values;

  explicit Gradients(const LayerGraph<T>& g)
  {
    for (const auto& p : g.params()) values.emplace_back(p.value.size(), T{});
  }

  void zero()
  {
    for (auto& v : values) std::fill(v.begin(), v.end(), T{});
  }

  void scale(T s)
  {
    for (auto& v : values)
      for (auto& x : v) x *= s;
  }
};

/// Activations and activation-gradients for one pass over one batch.
template <typename T>
class Workspace {
public:
  const Tensor4<T>& forward(const LayerGraph<T>& g, const Tensor4<T>& input)
  {
    const Shape& expect = g.input_shape();
    if (input.shape.c != expect.c || input.shape.h != expect.h || input.shape.w != expect.w)
      reject("forward: input ", input.shape.str(), " does not match graph input (N,", expect.c, ",", expect.h, ",", expect.w, ")");
    const auto& nodes = g.nodes();
    acts_.assign(nodes.size(), {});
    acts_[0] = input;
    for (std::size_t i = 1; i < nodes.size(); ++i) acts_[i] = eval(g, nodes[i]);
    return acts_.back();
  }

  /// Back-propagates grad_output (d loss / d graph output) and adds parameter
  /// gradients into `grads`.
  void backward(const LayerGraph<T>& g, const Tensor4<T>& grad_output, Gradients<T>& grads)
  {
    const auto& nodes = g.nodes();
    if (acts_.size() != nodes.size()) reject("backward called before forward");
    if (grad_output.shape != acts_.back().shape) reject("backward: grad shape ", grad_output.shape.str(), " != output ", acts_.back().shape.str());
    std::vector<Tensor4<T>> d(nodes.size());
    d.back() = grad_output;
    for (int i = static_cast<int>(nodes.size()) - 1; i >= 1; --i) {
      if (d[i].data.empty()) continue;
      propagate(g, nodes[i], d[i], d, grads);
      d[i] = {};
      if (i != static_cast<int>(nodes.size()) - 1) acts_[i] = {}; // no longer needed
    }
    input_grad_ = std::move(d[0]);
  }

  const Tensor4<T>& activation(int node) const { return acts_.at(node); }
  const Tensor4<T>& input_grad() const { return input_grad_; }

private:
  Tensor4<T> eval(const LayerGraph<T>& g, const LayerNode& n) const
  {
    const auto& x = acts_[n.inputs[0]];
    switch (n.kind) {
    case LayerKind::conv:
      return conv2d_forward<T>(x, n.conv, g.params()[n.weight].value, g.params()[n.bias].value);
    case LayerKind::relu: return relu_forward(x);
    case LayerKind::clipped_relu: return clipped_relu_forward(x, static_cast<T>(n.ceiling));
    case LayerKind::concat: {
      std::vector<const Tensor4<T>*> xs;
      for (int i : n.inputs) xs.push_back(&acts_[i]);
      return concat_depth<T>(std::span<const Tensor4<T>* const>(xs));
    }
    case LayerKind::add: return add_elementwise(x, acts_[n.inputs[1]]);
    case LayerKind::global_avg_pool: return global_avg_pool(x, x.shape.h, x.shape.w);
    case LayerKind::fully_connected:
      return fully_connected<T>(x, n.out.c, g.params()[n.weight].value, g.params()[n.bias].value);
    case LayerKind::input: break;
    }
    reject("unexpected layer kind in eval");
  }

  static void accumulate(Tensor4<T>& dst, Tensor4<T>&& src)
  {
    if (dst.data.empty()) {
      dst = std::move(src);
      return;
    }
    for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
  }

  void propagate(const LayerGraph<T>& g, const LayerNode& n, const Tensor4<T>& dy, std::vector<Tensor4<T>>& d,
                 Gradients<T>& grads)
  {
    const int in0 = n.inputs[0];
    const auto& x = acts_[in0];
    switch (n.kind) {
    case LayerKind::conv: {
      Tensor4<T> dx(x.shape);
      conv2d_backward_accumulate<T>(dy, x, n.conv, g.params()[n.weight].value, &dx, grads.values[n.weight],
                                    grads.values[n.bias]);
      accumulate(d[in0], std::move(dx));
      break;
    }
    case LayerKind::relu: accumulate(d[in0], relu_backward(dy, x)); break;
    case LayerKind::clipped_relu: accumulate(d[in0], clipped_relu_backward(dy, x, static_cast<T>(n.ceiling))); break;
    case LayerKind::concat: {
      std::vector<int> channels;
      for (int i : n.inputs) channels.push_back(acts_[i].shape.c);
      auto pieces = concat_depth_backward<T>(dy, channels);
      for (std::size_t k = 0; k < n.inputs.size(); ++k) accumulate(d[n.inputs[k]], std::move(pieces[k]));
      break;
    }
    case LayerKind::add: {
      accumulate(d[n.inputs[0]], Tensor4<T>(dy));
      accumulate(d[n.inputs[1]], Tensor4<T>(dy));
      break;
    }
    case LayerKind::global_avg_pool: accumulate(d[in0], global_avg_pool_backward(dy, x.shape)); break;
    case LayerKind::fully_connected: {
      Tensor4<T> dx(x.shape);
      fully_connected_backward_accumulate<T>(dy, x, g.params()[n.weight].value, &dx, grads.values[n.weight],
                                             grads.values[n.bias]);
      accumulate(d[in0], std::move(dx));
      break;
    }
    case LayerKind::input: break;
    }
  }

  std::vector<Tensor4<T>> acts_;
  Tensor4<T> input_grad_;
};

} // namespace amc::nn

#endif // AMC_NN_GRAPH_HPP
