#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "odrepair/errors.hpp"
#include "odrepair/rng.hpp"

namespace odrepair {

/* Line-oriented CSV access.
 *
 * All artifact files in this project are plain comma-separated tables with a
 * single header row. Lines starting with '#' carry metadata (e.g. the
 * manifest id an artifact was produced under) and are skipped by readers.
 */

class CsvFile {
 public:
  explicit CsvFile(const std::filesystem::path& path, std::size_t expected_fields)
      : path_(path.string()), in_(path), expected_(expected_fields) {
    if (!in_) throw data_error("cannot open " + path_);
    std::string line;
    while (next_raw(line)) {
      split(line, header_);
      if (header_.size() != expected_) {
        throw data_error(path_ + ":" + std::to_string(line_) +
                         ": expected " + std::to_string(expected_) +
                         " header fields, got " + std::to_string(header_.size()));
      }
      return;
    }
    throw data_error(path_ + ": missing header row");
  }

  const std::vector<std::string>& header() const { return header_; }
  const std::string& path() const { return path_; }
  std::size_t line() const { return line_; }

  bool next(std::vector<std::string>& fields) {
    std::string line;
    if (!next_raw(line)) return false;
    split(line, fields);
    if (fields.size() != expected_) {
      throw data_error(path_ + ":" + std::to_string(line_) + ": expected " +
                       std::to_string(expected_) + " fields, got " +
                       std::to_string(fields.size()));
    }
    return true;
  }

  std::int64_t parse_int(const std::string& field) const {
    std::int64_t value = 0;
    const char* first = field.data();
    const char* last = first + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
      throw data_error(path_ + ":" + std::to_string(line_) +
                       ": not an integer: '" + field + "'");
    }
    return value;
  }

  double parse_double(const std::string& field) const {
    double value = 0;
    const char* first = field.data();
    const char* last = first + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
      throw data_error(path_ + ":" + std::to_string(line_) +
                       ": not a number: '" + field + "'");
    }
    return value;
  }

 private:
  bool next_raw(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (line[0] == '#') continue;
      return true;
    }
    return false;
  }

  static void split(const std::string& line, std::vector<std::string>& out) {
    out.clear();
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) {
        out.emplace_back(line.substr(start));
        return;
      }
      out.emplace_back(line.substr(start, comma - start));
      start = comma + 1;
    }
  }

  std::string path_;
  std::ifstream in_;
  std::size_t expected_ = 0;
  std::size_t line_ = 0;
  std::vector<std::string> header_;
};

namespace detail {
inline void require_header(const CsvFile& file, std::initializer_list<const char*> names) {
  std::size_t i = 0;
  for (const char* name : names) {
    if (file.header()[i] != name) {
      throw data_error(file.path() + ": expected header field '" + name +
                       "', got '" + file.header()[i] + "'");
    }
    ++i;
  }
}
}  // namespace detail

// Opens an artifact file for writing; optional '#'-prefixed metadata line
// goes first so readers can trace which run produced the file.
inline std::ofstream open_artifact(const std::filesystem::path& path,
                                   std::string_view metadata_line = {}) {
  std::ofstream out(path, std::ios::binary);  // binary: identical bytes on every platform
  if (!out) throw data_error("cannot write " + path.string());
  if (!metadata_line.empty()) out << "# " << metadata_line << "\n";
  return out;
}

// Shortest decimal form that round-trips the exact double.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

// FNV-1a over a file's bytes; used for input checksums in run manifests.
inline std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path.string());
  std::uint64_t h = 14695981039346656037ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
  }
  return h;
}

inline std::string to_hex(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return out;
}

}  // namespace odrepair
