#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hedgekit::csv {

/// Shortest decimal that round-trips to the same double ("%.17g" fallback).
std::string format_double(double value);

std::vector<std::string> split_line(std::string_view line);

/// Whole-field decimal parse; nullopt on junk, trailing characters or empty.
std::optional<double> parse_double(std::string_view text);

/// Buffered writer; throws IoError when the file cannot be opened or written.
class Writer {
public:
  explicit Writer(const std::filesystem::path& path);

  void header(std::initializer_list<std::string_view> columns);
  void header(const std::vector<std::string>& columns);

  Writer& field(std::string_view text);
  Writer& field(double value);
  Writer& field(long long value);
  Writer& field(std::size_t value) { return field(static_cast<long long>(value)); }
  Writer& field(int value) { return field(static_cast<long long>(value)); }
  Writer& empty_field();
  void end_row();

  void close();

private:
  void separator();

  std::filesystem::path path_;
  std::ofstream out_;
  bool row_started_ = false;
};

}  // namespace hedgekit::csv
