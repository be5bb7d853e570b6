#ifndef AMC_HARNESS_DIGEST_HPP
#define AMC_HARNESS_DIGEST_HPP

#include <openssl/evp.h>

#include <array>
#include <complex>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace amc::harness {

/// Hex SHA-256 of a byte string.
inline std::string sha256_hex(std::string_view bytes)
{
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  std::string hex;
  hex.reserve(2 * len);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

inline std::string sha256_hex(const std::vector<std::complex<double>>& values)
{
  return sha256_hex(std::string_view(reinterpret_cast<const char*>(values.data()), values.size() * sizeof(values[0])));
}

} // namespace amc::harness

#endif // AMC_HARNESS_DIGEST_HPP
