#pragma once

// Minimal reader for the comma-separated files used throughout the project:
// no quoting, one header line, '#' never special.

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "penlearn/data_model.hpp"

namespace penlearn::csv {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline void split(std::string_view line, std::vector<std::string_view>& out) {
  out.clear();
  std::size_t pos = 0;
  while (true) {
    auto comma = line.find(',', pos);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(pos));
      return;
    }
    out.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
}

class Reader {
 public:
  Reader(const std::filesystem::path& path, std::vector<std::string> header)
      : path_(path), in_(path), width_(header.size()) {
    if (!in_) throw DataError("cannot open " + path.string());
    std::string first;
    if (!std::getline(in_, first)) throw FormatError(path.string() + ": missing header");
    line_ = 1;
    if (first.size() >= 3 && first.compare(0, 3, "\xEF\xBB\xBF") == 0) first.erase(0, 3);
    std::vector<std::string_view> cols;
    split(trim(first), cols);
    bool ok = cols.size() == header.size();
    for (std::size_t i = 0; ok && i < cols.size(); ++i) ok = trim(cols[i]) == header[i];
    if (!ok) {
      std::string want;
      for (const auto& h : header) want += (want.empty() ? "" : ",") + h;
      throw FormatError(path.string() + ": missing header, expected '" + want + "'");
    }
  }

  // Reads the next non-empty row; false at end of file.
  bool next(std::vector<std::string_view>& row) {
    while (std::getline(in_, buf_)) {
      ++line_;
      auto t = trim(buf_);
      if (t.empty()) continue;
      split(t, row);
      if (row.size() != width_)
        throw ParseError(path_.string() + ": expected " + std::to_string(width_) + " fields", line_);
      return true;
    }
    return false;
  }

  std::size_t line() const { return line_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::size_t width_;
  std::string buf_;
  std::size_t line_ = 0;
};

}  // namespace penlearn::csv
