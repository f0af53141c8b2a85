#pragma once

#include <fstream>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace tcsim {

// %.17g: shortest text that reparses to the identical double.
std::string format_double(double value);

// CSV with '#'-prefixed metadata lines, then one header row, then data.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);
  void metadata(const std::string& key, const std::string& value);
  void header(const std::vector<std::string>& columns);
  void row(std::span<const double> values);
  std::size_t rows_written() const { return rows_; }

 private:
  std::ofstream out_;
  std::size_t rows_ = 0;
  bool header_written_ = false;
};

struct CsvTable {
  std::map<std::string, std::string> metadata;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int column_index(const std::string& name) const;  // -1 if absent
};

CsvTable read_csv(const std::string& path);

}  // namespace tcsim
