#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace via {

/// Minimal CSV emitter with deterministic number formatting. Every file
/// starts with a `#` comment naming the column units.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& units_comment,
            const std::vector<std::string>& header) {
    if (path.has_parent_path()) {
      std::filesystem::create_directories(path.parent_path());
    }
    out_.open(path);
    if (!out_) {
      throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out_ << "# " << units_comment << "\n";
    for (size_t i = 0; i < header.size(); ++i) {
      out_ << header[i] << (i + 1 < header.size() ? "," : "\n");
    }
  }

  static std::string format(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
  }

  void row(const std::vector<std::string>& fields) {
    for (size_t i = 0; i < fields.size(); ++i) {
      out_ << fields[i] << (i + 1 < fields.size() ? "," : "\n");
    }
  }

  void row(const std::vector<double>& fields) {
    for (size_t i = 0; i < fields.size(); ++i) {
      out_ << format(fields[i]) << (i + 1 < fields.size() ? "," : "\n");
    }
  }

 private:
  std::ofstream out_;
};

}  // namespace via
