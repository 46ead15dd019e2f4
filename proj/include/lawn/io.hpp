#pragma once

#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace lawn::io {

// RFC-4180 style CSV: comma separated, CRLF-free rows, fields quoted
// only when they contain a comma, quote, or newline.
std::string csv_field(std::string_view s);

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  template <typename... Ts>
  void row(const Ts&... vals) {
    std::ostringstream os;
    os.precision(17);
    bool first = true;
    ((os << (first ? "" : ",") << vals, first = false), ...);
    lines_.push_back(os.str());
  }

  std::string str() const;
  std::size_t rows() const { return lines_.size(); }

 private:
  std::string header_;
  std::vector<std::string> lines_;
};

// write-temp-then-rename; the rename is atomic on POSIX filesystems
void atomic_write(const std::filesystem::path& path,
                  const std::string& content);

uint64_t fnv1a64(std::string_view data);
std::string hex64(uint64_t value);

double db_to_linear(double db);      // power ratio
double dbm_to_watt(double dbm);
double linear_to_db(double linear);

}  // namespace lawn::io
