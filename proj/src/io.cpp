#include "lawn/io.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace lawn::io {

std::string csv_field(std::string_view s) {
  const bool needs_quote =
      s.find_first_of(",\"\n\r") != std::string_view::npos;
  if (!needs_quote) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

CsvWriter::CsvWriter(std::vector<std::string> header) {
  std::string h;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) h += ',';
    h += csv_field(header[i]);
  }
  header_ = h;
}

std::string CsvWriter::str() const {
  std::string out = header_;
  out += '\n';
  for (const auto& line : lines_) {
    out += line;
    out += '\n';
  }
  return out;
}

void atomic_write(const std::filesystem::path& path,
                  const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out << content;
    if (!out.flush())
      throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

uint64_t fnv1a64(std::string_view data) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(uint64_t value) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[value & 0xf];
    value >>= 4;
  }
  return out;
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

}  // namespace lawn::io
