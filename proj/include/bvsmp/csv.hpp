#pragma once

#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace bvsmp {

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

/// Minimal CSV emitter: fixed header, comma separated, '\n' line ends.
class CsvWriter {
 public:
  CsvWriter(std::ostream& os, std::vector<std::string> header);

  CsvWriter& field(std::string_view text);
  CsvWriter& field(double v);
  CsvWriter& field(long long v);
  CsvWriter& field(unsigned long long v);
  CsvWriter& field(int v) { return field(static_cast<long long>(v)); }
  CsvWriter& field(std::size_t v) { return field(static_cast<unsigned long long>(v)); }
  CsvWriter& field(bool v) { return field(std::string_view(v ? "true" : "false")); }
  void end_row();

  std::size_t columns() const { return columns_; }

 private:
  std::ostream& os_;
  std::size_t columns_;
  std::size_t in_row_ = 0;
};

/// Parsed CSV (no quoting; used for golden checks and round trips).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv(std::string_view text);

}  // namespace bvsmp
