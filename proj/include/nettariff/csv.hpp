#pragma once

// nettariff/csv.hpp — deterministic CSV output: comma separator, '.'
// decimal, LF line endings, 9 significant digits.  Every table ends with
// a summary comment carrying the tool version, a hash of the config file
// and the seed, so identical inputs produce byte-identical files.

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "nettariff/model.hpp"
#include "nettariff/version.hpp"

namespace nettariff {

/// 9-significant-digit rendering; the cap/congestion sentinels render as
/// their config spellings.
inline std::string format_number(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

inline std::string format_cap(double g) {
  return is_unlimited(g) ? "unlimited" : format_number(g);
}

/// FNV-1a 64-bit hash of the raw config bytes.
inline std::uint64_t fnv1a_hash(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  void header(const std::vector<std::string>& columns) { line(columns); }

  void row(const std::vector<std::string>& cells) { line(cells); }

  void comment(const std::string& text) { out_ << "# " << text << "\n"; }

  void summary(std::string_view config_bytes, std::uint64_t seed) {
    char hash[20];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(fnv1a_hash(config_bytes)));
    out_ << "# nettariff " << kVersion << " config_hash=" << hash
         << " seed=" << seed << "\n";
  }

 private:
  void line(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  std::ostream& out_;
};

}  // namespace nettariff
