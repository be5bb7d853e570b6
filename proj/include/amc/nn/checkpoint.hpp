#ifndef AMC_NN_CHECKPOINT_HPP
#define AMC_NN_CHECKPOINT_HPP

// Checkpoint layout (all integers little-endian):
//
//   char[4]  magic "FIFN"
//   u32      format version (1)
//   u32      class count
//   u32      input size (square image side)
//   u32      parameter count P
//   P x { u32 name length, name bytes, u32 rank, u32 dims[rank], u64 offset }
//   f32[]    parameter data; `offset` counts floats from the start of this block

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

#include "amc/nn/graph.hpp"

namespace amc::nn {

inline constexpr char checkpoint_magic[4] = {'F', 'I', 'F', 'N'};
inline constexpr std::uint32_t checkpoint_version = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

class CheckpointError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct CheckpointTensor {
  std::string name;
  std::vector<int> dims;
  std::vector<float> values;
};

struct Checkpoint {
  std::uint32_t num_classes = 0;
  std::uint32_t input_size = 0;
  std::vector<CheckpointTensor> tensors;

  template <typename T>
  static Checkpoint from_graph(const LayerGraph<T>& g, std::uint32_t num_classes, std::uint32_t input_size)
  {
    Checkpoint c{num_classes, input_size, {}};
    for (const auto& p : g.params())
      c.tensors.push_back({p.name, p.dims, std::vector<float>(p.value.begin(), p.value.end())});
    return c;
  }

  /// Copies tensors into `g`, which must have the identical parameter layout.
  template <typename T>
  void apply_to(LayerGraph<T>& g) const
  {
    auto& params = g.params();
    if (params.size() != tensors.size())
      throw CheckpointError("checkpoint has " + std::to_string(tensors.size()) + " tensors, model expects " +
                            std::to_string(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (params[i].name != tensors[i].name || params[i].dims != tensors[i].dims)
        throw CheckpointError("checkpoint tensor '" + tensors[i].name + "' does not match model parameter '" +
                              params[i].name + "'");
      std::transform(tensors[i].values.begin(), tensors[i].values.end(), params[i].value.begin(),
                     [](float v) { return static_cast<T>(v); });
    }
  }

  bool operator==(const Checkpoint& o) const
  {
    if (num_classes != o.num_classes || input_size != o.input_size || tensors.size() != o.tensors.size()) return false;
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      const auto& a = tensors[i];
      const auto& b = o.tensors[i];
      if (a.name != b.name || a.dims != b.dims || a.values.size() != b.values.size()) return false;
      if (std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(float)) != 0) return false;
    }
    return true;
  }
};

namespace detail {

template <typename U>
void put(std::string& out, U v)
{
  char buf[sizeof(U)];
  std::memcpy(buf, &v, sizeof(U));
  out.append(buf, sizeof(U));
}

class Reader {
public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename U>
  U get()
  {
    need(sizeof(U));
    U v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(U));
    pos_ += sizeof(U);
    return v;
  }

  std::string take(std::size_t n)
  {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t pos() const { return pos_; }
  std::size_t size() const { return bytes_.size(); }

private:
  void need(std::size_t n) const
  {
    if (bytes_.size() - pos_ < n) throw CheckpointError("checkpoint truncated");
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

} // namespace detail

inline std::string encode_checkpoint(const Checkpoint& c)
{
  std::string out(checkpoint_magic, 4);
  detail::put<std::uint32_t>(out, checkpoint_version);
  detail::put<std::uint32_t>(out, c.num_classes);
  detail::put<std::uint32_t>(out, c.input_size);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(c.tensors.size()));
  std::uint64_t offset = 0;
  for (const auto& t : c.tensors) {
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(t.dims.size()));
    for (int d : t.dims) detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    detail::put<std::uint64_t>(out, offset);
    offset += t.values.size();
  }
  for (const auto& t : c.tensors)
    out.append(reinterpret_cast<const char*>(t.values.data()), t.values.size() * sizeof(float));
  return out;
}

inline Checkpoint decode_checkpoint(const std::string& bytes)
{
  detail::Reader r(bytes);
  if (r.take(4) != std::string(checkpoint_magic, 4)) throw CheckpointError("not a checkpoint (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != checkpoint_version) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint c;
  c.num_classes = r.get<std::uint32_t>();
  c.input_size = r.get<std::uint32_t>();
  const auto count = r.get<std::uint32_t>();
  std::vector<std::uint64_t> offsets;
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointTensor t;
    t.name = r.take(r.get<std::uint32_t>());
    const auto rank = r.get<std::uint32_t>();
    if (rank > 8) throw CheckpointError("checkpoint tensor '" + t.name + "' has implausible rank");
    std::size_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      t.dims.push_back(static_cast<int>(r.get<std::uint32_t>()));
      n *= static_cast<std::size_t>(t.dims.back());
    }
    offsets.push_back(r.get<std::uint64_t>());
    t.values.resize(n);
    c.tensors.push_back(std::move(t));
  }
  const std::size_t data_start = r.pos();
  const std::size_t floats = (r.size() - data_start) / sizeof(float);
  for (std::size_t i = 0; i < c.tensors.size(); ++i) {
    auto& t = c.tensors[i];
    if (offsets[i] + t.values.size() > floats) throw CheckpointError("checkpoint tensor '" + t.name + "' out of bounds");
    std::memcpy(t.values.data(), bytes.data() + data_start + offsets[i] * sizeof(float), t.values.size() * sizeof(float));
  }
  return c;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c)
{
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    const std::string bytes = encode_checkpoint(c);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("cannot write checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_checkpoint(bytes);
}

} // namespace amc::nn

#endif // AMC_NN_CHECKPOINT_HPP
