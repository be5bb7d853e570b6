#ifndef AMC_COMMON_HPP
#define AMC_COMMON_HPP

#include <complex>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace amc {

using Complex = std::complex<double>;
using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent sub-seeds from a master seed.
constexpr std::uint64_t mix_seed(std::uint64_t x)
{
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b)
{
  return mix_seed(mix_seed(a) ^ (b + 0x632BE59BD9B4E019ULL));
}

template <typename... Args>
std::string concat_message(const Args&... args)
{
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

template <typename... Args>
[[noreturn]] void reject(const Args&... args)
{
  throw std::invalid_argument(concat_message(args...));
}

inline double mean_power(const std::vector<Complex>& xs)
{
  if (xs.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& x : xs) acc += std::norm(x);
  return acc / static_cast<double>(xs.size());
}

} // namespace amc

#endif // AMC_COMMON_HPP
