#pragma once

#include <charconv>
#include <fstream>
#include <string>

#include "bavamio/errors.hpp"

namespace bavamio {

// Shortest representation that round-trips exactly; output is therefore
// byte-stable across runs.
inline std::string csv_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path) {
    if (!out_) throw DataError("cannot open '" + path + "' for writing");
  }

  void raw_row(const std::string& line) { out_ << line << '\n'; }

  template <typename... Fields>
  void row(const Fields&... fields) {
    bool first = true;
    ((out_ << (first ? "" : ","), first = false, write_field(fields)), ...);
    out_ << '\n';
  }

 private:
  void write_field(double v) { out_ << csv_double(v); }
  void write_field(int v) { out_ << v; }
  void write_field(long v) { out_ << v; }
  void write_field(long long v) { out_ << v; }
  void write_field(unsigned long v) { out_ << v; }
  void write_field(unsigned long long v) { out_ << v; }
  void write_field(const std::string& v) { out_ << v; }
  void write_field(const char* v) { out_ << v; }

  std::ofstream out_;
};

}  // namespace bavamio
