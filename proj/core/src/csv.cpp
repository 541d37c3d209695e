#include "dinilab/csv.hpp"

#include <cmath>
#include <cstdio>

#include "dinilab/errors.hpp"

namespace dinilab {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v == 0.0 ? 0.0 : v);  // no "-0"
  return buf;
}

namespace {

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

}  // namespace

CsvWriter::CsvWriter(const std::string& path, std::vector<std::string> columns)
    : path_(path), ncol_(columns.size()), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw ArgumentError("cannot open " + path + " for writing");
  for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << quote(columns[i]);
  out_ << '\n';
}

void CsvWriter::row(const std::vector<CsvCell>& cells) {
  if (cells.size() != ncol_) throw ArgumentError(path_ + ": row has " + std::to_string(cells.size()) +
                                                 " cells, header has " + std::to_string(ncol_));
  for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << quote(cells[i].text);
  out_ << '\n';
  out_.flush();
}

}  // namespace dinilab
