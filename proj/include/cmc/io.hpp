#pragma once

// CSV output with '#'-prefixed metadata lines, LF endings.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "cmc/error.hpp"

namespace cmc {

inline constexpr const char* kVersion = "0.1.0";

struct RunMetadata {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> extra;
};

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Shortest round-trip-safe formatting of a double.
inline std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const RunMetadata& meta,
            const std::vector<std::string>& columns)
      : out_(path, std::ios::binary), columns_(columns.size()) {
    if (!out_) throw Error(ErrorKind::numerical, "cannot write " + path.string());
    out_ << "# cmc " << kVersion << '\n';
    out_ << "# config_hash " << hex64(meta.config_hash) << '\n';
    out_ << "# seed " << meta.seed << '\n';
    out_ << "# timestamp " << utc_timestamp() << '\n';
    for (const auto& [k, v] : meta.extra) out_ << "# " << k << ' ' << v << '\n';
    write_row(columns);
  }

  void write_row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw Error(ErrorKind::numerical, "CSV row has wrong arity");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
  std::size_t columns_;
};

}  // namespace cmc
