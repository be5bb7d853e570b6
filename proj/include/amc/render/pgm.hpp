#ifndef AMC_RENDER_PGM_HPP
#define AMC_RENDER_PGM_HPP

// Binary PGM (P5), 8-bit, maxval 255.

#include <cctype>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>

#include "amc/render/constellation.hpp"

namespace amc::render {

class PgmError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline std::string encode_pgm(const GrayImage& img)
{
  std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.append(img.pixels.begin(), img.pixels.end());
  return out;
}

namespace detail {

inline void skip_space_and_comments(const std::string& s, std::size_t& pos)
{
  while (pos < s.size()) {
    if (std::isspace(static_cast<unsigned char>(s[pos]))) {
      ++pos;
    } else if (s[pos] == '#') {
      while (pos < s.size() && s[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
}

inline long read_header_int(const std::string& s, std::size_t& pos, const char* what)
{
  skip_space_and_comments(s, pos);
  const std::size_t start = pos;
  while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
  if (pos == start) throw PgmError(std::string("PGM: malformed header, expected ") + what);
  if (pos - start > 9) throw PgmError(std::string("PGM: ") + what + " out of range");
  return std::stol(s.substr(start, pos - start));
}

} // namespace detail

inline GrayImage decode_pgm(const std::string& bytes)
{
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw PgmError("PGM: bad magic (expected P5)");
  std::size_t pos = 2;
  const long w = detail::read_header_int(bytes, pos, "width");
  const long h = detail::read_header_int(bytes, pos, "height");
  const long maxval = detail::read_header_int(bytes, pos, "maxval");
  if (w <= 0 || h <= 0) throw PgmError("PGM: non-positive dimensions");
  if (maxval != 255) throw PgmError("PGM: unsupported maxval " + std::to_string(maxval) + " (expected 255)");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
    throw PgmError("PGM: missing whitespace after maxval");
  ++pos;
  const auto n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() - pos < n) throw PgmError("PGM: truncated pixel data");
  if (bytes.size() - pos > n) throw PgmError("PGM: trailing bytes after pixel data");
  GrayImage img{static_cast<int>(w), static_cast<int>(h), {}};
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  return img;
}

inline std::string read_file_bytes(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path, const std::string& bytes)
{
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline GrayImage read_pgm(const std::filesystem::path& path) { return decode_pgm(read_file_bytes(path)); }

inline void write_pgm(const std::filesystem::path& path, const GrayImage& img) { write_file_bytes(path, encode_pgm(img)); }

} // namespace amc::render

#endif // AMC_RENDER_PGM_HPP
