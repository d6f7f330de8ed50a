#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace curricula {

// Shortest round-trippable decimal form; identical doubles always format to
// identical strings, which the byte-identical log contract relies on.
std::string format_double(double v);

// Line-buffered CSV writer with UTF-8 content and LF line endings.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  void write_row(const std::vector<std::string>& cells);
  void flush() { out_.flush(); }
  int columns() const { return columns_; }

 private:
  std::ofstream out_;
  int columns_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  int column(const std::string& name) const;  // -1 if absent
};
CsvTable read_csv(const std::string& path);

}  // namespace curricula
