#pragma once

#include <cstddef>
#include <fstream>
#include <string>
#include <vector>

namespace dinilab {

/// Shortest round-trip text of a double ("%.17g"; inf/-inf/nan spelled out).
std::string format_double(double v);

/// One CSV cell; numbers are formatted with format_double.
struct CsvCell {
  std::string text;
  CsvCell(double v) : text(format_double(v)) {}
  CsvCell(int v) : text(std::to_string(v)) {}
  CsvCell(long v) : text(std::to_string(v)) {}
  CsvCell(std::size_t v) : text(std::to_string(v)) {}
  CsvCell(bool v) : text(v ? "true" : "false") {}
  CsvCell(const char* s) : text(s) {}
  CsvCell(std::string s) : text(std::move(s)) {}
};

/// Comma-separated writer with a fixed header. Text cells containing a comma or quote are quoted.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, std::vector<std::string> columns);
  void row(const std::vector<CsvCell>& cells);
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
  std::size_t ncol_;
  std::ofstream out_;
};

}  // namespace dinilab
