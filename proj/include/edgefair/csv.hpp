#pragma once

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

namespace edgefair {

/// Full-precision, locale-independent double formatting. Rerunning the same
/// binary reproduces CSV output byte for byte.
inline std::string csv_num(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

inline std::string csv_num(int v) { return std::to_string(v); }
inline std::string csv_num(long v) { return std::to_string(v); }
inline std::string csv_num(std::size_t v) { return std::to_string(v); }

class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header) {
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

}  // namespace edgefair
