#include "tcsim/csvio.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

namespace tcsim {

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
  if (!out_) throw std::runtime_error("cannot open for writing: " + path);
}

void CsvWriter::metadata(const std::string& key, const std::string& value) {
  out_ << "# " << key << ": " << value << "\n";
}

void CsvWriter::header(const std::vector<std::string>& columns) {
  for (std::size_t i = 0; i < columns.size(); ++i)
    out_ << columns[i] << (i + 1 < columns.size() ? "," : "\n");
  header_written_ = true;
}

void CsvWriter::row(std::span<const double> values) {
  if (!header_written_) throw std::logic_error("CsvWriter: header before rows");
  for (std::size_t i = 0; i < values.size(); ++i)
    out_ << format_double(values[i]) << (i + 1 < values.size() ? "," : "\n");
  ++rows_;
}

int CsvTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  CsvTable table;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto colon = line.find(':');
      if (colon != std::string::npos) {
        std::string key = line.substr(1, colon - 1);
        std::string value = line.substr(colon + 1);
        const auto strip = [](std::string& s) {
          const auto a = s.find_first_not_of(' ');
          const auto b = s.find_last_not_of(' ');
          s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
        };
        strip(key);
        strip(value);
        table.metadata[key] = value;
      }
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!header_seen) {
      table.columns = cells;
      header_seen = true;
      continue;
    }
    std::vector<double> row(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      char* end = nullptr;
      row[i] = std::strtod(cells[i].c_str(), &end);
      if (end == cells[i].c_str())
        throw std::runtime_error("bad numeric cell in " + path + ": " + cells[i]);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace tcsim
