#include "egf/csv.hpp"

#include <cstdio>

#include "egf/errors.hpp"

namespace egf {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc), columns_(header.size()) {
  if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
  text_row(header);
}

void CsvWriter::row(std::span<const double> values) {
  if (values.size() != columns_) throw std::logic_error("csv row width does not match header in " + path_.string());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out_ << ',';
    out_ << format_double(values[i]);
  }
  out_ << '\n';
}

void CsvWriter::text_row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw std::logic_error("csv row width does not match header in " + path_.string());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
}

}  // namespace egf
