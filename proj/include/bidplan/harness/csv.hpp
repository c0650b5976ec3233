#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace bidplan {

// Comma-separated output whose first lines are "# config_digest=<hex>" and
// "# seed=<n>". Cells are written verbatim; callers format numbers with csv_cell.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& config_digest,
            std::uint64_t seed, const std::vector<std::string>& columns);

  void row(const std::vector<std::string>& cells);
  std::size_t columns() const { return columns_; }

 private:
  std::ofstream out_;
  std::size_t columns_;
  std::filesystem::path path_;
};

std::string csv_cell(double value);
std::string csv_cell(long value);
std::string csv_cell(int value);
std::string csv_cell(bool value);
std::string csv_cell(const std::string& value);

// Reads a CSV written by CsvWriter: comment lines are skipped, the first
// remaining line is the header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> comments;

  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace bidplan
