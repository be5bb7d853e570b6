#ifndef AMC_MODEL_FIFNET_HPP
#define AMC_MODEL_FIFNET_HPP

// FiF-Net: stem conv, five downsampling modules, global pooling and a two
// layer classifier head.
//
//   input -> conv3x3(64) -> ReLU
//   5 x { gconv3x3 stride 2 (64 groups) -> clipped ReLU = x
//         y1 = FiF-block(x); s = x + y1; out = FiF-block(s) }
//   -> avgpool(final spatial size) -> fc(128) -> ReLU -> fc(num_classes)
//
// FiF-block(x), x with 64 channels:
//   gconv flow: 1x1(32)+ReLU -> [dw1x3, dw3x1] each + clipped ReLU -> concat(64) -> 1x1(32)+ReLU
//   conv flow:  1x1(32)+ReLU -> [conv1x3(32), conv3x1(32)] each + ReLU -> concat(64) -> 1x1(32)+ReLU
//   concat(gconv flow, conv flow) -> 64

#include <cstdint>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "amc/nn/checkpoint.hpp"
#include "amc/nn/graph.hpp"
#include "amc/nn/ops.hpp"

namespace amc::model {

using nn::ConvSpec;
using nn::LayerGraph;
using nn::Tensor4;

struct FifBlockSpec {
  int in_depth = 64;
  int flow_width = 32;  // entry and exit 1x1 widths
  int kernel_width = 32; // d11 = d12 = d21 = d22

  void validate() const
  {
    if (2 * flow_width != in_depth)
      reject("FiF-block: the two flow outputs (", flow_width, " + ", flow_width, ") must sum to the input depth ", in_depth,
             " for the skip addition");
  }
};

struct FifNetSpec {
  int input_size = 200;
  int num_classes = 8;
  int module_count = 5;
  int stem_filters = 64;
  int fc1_width = 128;
  double clip_ceiling = 6.0;
  bool skip_connections = true;
  FifBlockSpec block{};

  /// Spatial side after the stem and after each module.
  std::vector<int> spatial_chain() const
  {
    std::vector<int> chain{input_size};
    for (int m = 0; m < module_count; ++m) chain.push_back((chain.back() + 1) / 2);
    return chain;
  }

  void validate() const
  {
    if (num_classes < 2) reject("FiF-Net needs >= 2 classes, got ", num_classes);
    if (module_count < 1) reject("FiF-Net needs >= 1 module");
    if (stem_filters != block.in_depth) reject("stem width ", stem_filters, " must equal FiF-block depth ", block.in_depth);
    if (fc1_width < 1) reject("fc1 width must be >= 1");
    if (!(clip_ceiling > 0.0)) reject("clipped ReLU ceiling must be positive");
    block.validate();
    const auto chain = spatial_chain();
    for (int m = 0; m < module_count; ++m)
      if (chain[m] < 2)
        reject("input size ", input_size, " cannot be halved ", module_count, " times (spatial size reaches ", chain[m],
               " before module ", m + 1, ")");
  }
};

template <typename T>
struct FifNet {
  FifNetSpec spec;
  LayerGraph<T> graph;
  std::vector<int> module_outputs; // node ids, one per module
  int pool_node = -1;
};

namespace detail {

template <typename T>
int conv_act(LayerGraph<T>& g, const std::string& name, int input, ConvSpec spec, bool clipped, double ceiling)
{
  const int c = g.add_conv(name, input, spec);
  return clipped ? g.add_clipped_relu(name + ".clip", c, ceiling) : g.add_relu(name + ".relu", c);
}

inline ConvSpec pointwise(int in, int out) { return {in, out, 1, 1, 1, 1, 1}; }

template <typename T>
int fif_block(LayerGraph<T>& g, const std::string& p, int input, const FifBlockSpec& b, double ceiling)
{
  const int w = b.flow_width;
  const int k = b.kernel_width;

  const int g_in = conv_act(g, p + ".gflow.entry", input, pointwise(b.in_depth, w), false, ceiling);
  const int g13 = conv_act(g, p + ".gflow.gconv1x3", g_in, {w, k, 1, 3, 1, 1, w}, true, ceiling);
  const int g31 = conv_act(g, p + ".gflow.gconv3x1", g_in, {w, k, 3, 1, 1, 1, w}, true, ceiling);
  const int g_cat = g.add_concat(p + ".gflow.concat", {g13, g31});
  const int g_out = conv_act(g, p + ".gflow.exit", g_cat, pointwise(2 * k, w), false, ceiling);

  const int c_in = conv_act(g, p + ".cflow.entry", input, pointwise(b.in_depth, w), false, ceiling);
  const int c13 = conv_act(g, p + ".cflow.conv1x3", c_in, {w, k, 1, 3, 1, 1, 1}, false, ceiling);
  const int c31 = conv_act(g, p + ".cflow.conv3x1", c_in, {w, k, 3, 1, 1, 1, 1}, false, ceiling);
  const int c_cat = g.add_concat(p + ".cflow.concat", {c13, c31});
  const int c_out = conv_act(g, p + ".cflow.exit", c_cat, pointwise(2 * k, w), false, ceiling);

  const int out = g.add_concat(p + ".concat", {g_out, c_out});
  if (g.node(out).out.c != b.in_depth)
    reject("FiF-block '", p, "': output depth ", g.node(out).out.c, " != ", b.in_depth);
  return out;
}

} // namespace detail

template <typename T = float>
FifNet<T> build_fifnet(const FifNetSpec& spec)
{
  spec.validate();
  FifNet<T> net{spec, {}, {}, -1};
  auto& g = net.graph;
  const int d = spec.block.in_depth;
  const double m = spec.clip_ceiling;
  int x = g.add_input("input", 1, spec.input_size, spec.input_size);
  x = detail::conv_act(g, "stem.conv", x, {1, spec.stem_filters, 3, 3, 1, 1, 1}, false, m);

  const auto chain = spec.spatial_chain();
  for (int mod = 0; mod < spec.module_count; ++mod) {
    const std::string p = "m" + std::to_string(mod + 1);
    const int down = detail::conv_act(g, p + ".gconv", x, {d, d, 3, 3, 2, 2, d}, true, m);
    const auto& s = g.node(down).out;
    if (s.h != chain[mod + 1] || s.w != chain[mod + 1])
      reject("module ", mod + 1, ": spatial size ", s.h, "x", s.w, " breaks the halving chain (expected ", chain[mod + 1], ")");
    const int b1 = detail::fif_block(g, p + ".block1", down, spec.block, m);
    const int mid = spec.skip_connections ? g.add_add(p + ".skip", down, b1) : b1;
    x = detail::fif_block(g, p + ".block2", mid, spec.block, m);
    net.module_outputs.push_back(x);
  }

  const int side = chain.back();
  net.pool_node = g.add_global_avg_pool("avgpool", x, side, side);
  x = g.add_fully_connected("fc1", net.pool_node, spec.fc1_width);
  x = g.add_relu("fc1.relu", x);
  g.add_fully_connected("fc2", x, spec.num_classes);
  g.validate();
  return net;
}

/// Pixels in [0, 1], one single-channel square image per sample.
template <typename T>
Tensor4<T> images_to_tensor(const std::vector<std::vector<double>>& images, int size)
{
  Tensor4<T> t(static_cast<int>(images.size()), 1, size, size);
  for (std::size_t n = 0; n < images.size(); ++n) {
    if (images[n].size() != static_cast<std::size_t>(size) * size)
      reject("image ", n, " has ", images[n].size(), " pixels, network expects ", size, "x", size);
    std::copy(images[n].begin(), images[n].end(), t.sample(static_cast<int>(n)));
  }
  return t;
}

/// Logits, shape (N, num_classes, 1, 1).
template <typename T>
Tensor4<T> forward(const FifNet<T>& net, const Tensor4<T>& batch)
{
  if (batch.shape.c != 1 || batch.shape.h != net.spec.input_size || batch.shape.w != net.spec.input_size)
    reject("forward: batch ", batch.shape.str(), " does not match network input 1x", net.spec.input_size, "x",
           net.spec.input_size);
  nn::Workspace<T> ws;
  return ws.forward(net.graph, batch);
}

struct Prediction {
  int label = -1;
  std::vector<double> probabilities;
};

inline Prediction prediction_from_logits(std::span<const double> logits)
{
  Prediction p;
  p.probabilities = nn::softmax<double>(logits);
  p.label = static_cast<int>(std::max_element(p.probabilities.begin(), p.probabilities.end()) - p.probabilities.begin());
  return p;
}

template <typename T>
Prediction predict(const FifNet<T>& net, const std::vector<double>& image)
{
  const auto logits = forward(net, images_to_tensor<T>({image}, net.spec.input_size));
  std::vector<double> l(logits.data.begin(), logits.data.end());
  return prediction_from_logits(l);
}

struct LayerParams {
  std::string name;
  std::string kind;
  std::string shape;
  std::size_t params = 0;
};

template <typename T>
std::vector<LayerParams> param_report(const LayerGraph<T>& g)
{
  std::vector<LayerParams> out;
  for (const auto& n : g.nodes()) {
    std::size_t count = 0;
    if (n.weight >= 0) count += g.params()[n.weight].value.size();
    if (n.bias >= 0) count += g.params()[n.bias].value.size();
    std::ostringstream shape;
    shape << n.out.h << "x" << n.out.w << "x" << n.out.c;
    std::string kind = nn::layer_kind_name(n.kind);
    if (n.kind == nn::LayerKind::conv) {
      kind = (n.conv.groups > 1 ? "gconv " : "conv ") + std::to_string(n.conv.kernel_h) + "x" +
             std::to_string(n.conv.kernel_w) + " s" + std::to_string(n.conv.stride_h) + " g" + std::to_string(n.conv.groups);
    }
    out.push_back({n.name, kind, shape.str(), count});
  }
  return out;
}

template <typename T>
std::size_t param_count(const LayerGraph<T>& g)
{
  return g.param_count();
}

/// Human-readable graph listing: name, type, output shape (HxWxC), inputs, params.
template <typename T>
std::string graph_dump(const FifNet<T>& net)
{
  std::ostringstream os;
  const auto report = param_report(net.graph);
  os << "# FiF-Net input " << net.spec.input_size << "x" << net.spec.input_size << ", classes " << net.spec.num_classes
     << ", modules " << net.spec.module_count << ", clip ceiling " << net.spec.clip_ceiling << "\n";
  os << "# block wiring: per flow entry 1x1 -> (1x3 || 3x1) -> concat -> exit 1x1; outer concat of gconv/conv flows\n";
  for (std::size_t i = 0; i < report.size(); ++i) {
    const auto& n = net.graph.nodes()[i];
    os << std::left << std::setw(28) << report[i].name << std::setw(20) << report[i].kind << std::setw(12)
       << report[i].shape;
    os << " in=";
    for (std::size_t k = 0; k < n.inputs.size(); ++k) os << (k ? "," : "") << net.graph.nodes()[n.inputs[k]].name;
    os << " params=" << report[i].params << "\n";
  }
  os << "# total trainable parameters: " << net.graph.param_count() << "\n";
  return os.str();
}

template <typename T>
nn::Checkpoint to_checkpoint(const FifNet<T>& net)
{
  return nn::Checkpoint::from_graph(net.graph, static_cast<std::uint32_t>(net.spec.num_classes),
                                    static_cast<std::uint32_t>(net.spec.input_size));
}

/// Rebuilds the network described by the checkpoint header and loads weights.
template <typename T = float>
FifNet<T> from_checkpoint(const nn::Checkpoint& ckpt, FifNetSpec base = {})
{
  base.num_classes = static_cast<int>(ckpt.num_classes);
  base.input_size = static_cast<int>(ckpt.input_size);
  auto net = build_fifnet<T>(base);
  ckpt.apply_to(net.graph);
  return net;
}

} // namespace amc::model

#endif // AMC_MODEL_FIFNET_HPP
