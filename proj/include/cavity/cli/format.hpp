#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/evp.h>

namespace cavity::cli {

/// 12 significant digits; plain notation for 1e-4 <= |x| < 1e6, lowercase
/// scientific otherwise.
inline std::string format_number(double x) {
  char buf[64];
  const double ax = std::abs(x);
  if (x == 0.0) return "0";
  if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  if (ax >= 1e-4 && ax < 1e6) {
    std::snprintf(buf, sizeof buf, "%.12g", x);
  } else {
    std::snprintf(buf, sizeof buf, "%.11e", x);
  }
  return buf;
}

/// Comma-separated row terminated by '\n'.
inline void write_csv_row(std::ostream& os, std::span<const std::string> cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) os << ',';
    os << cells[i];
  }
  os << '\n';
}

inline std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

}  // namespace cavity::cli
