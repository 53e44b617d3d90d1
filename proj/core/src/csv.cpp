#include "hedgekit/csv.hpp"

#include <charconv>
#include <cmath>

#include "hedgekit/errors.hpp"

namespace hedgekit::csv {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::vector<std::string> split_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

Writer::Writer(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
  if (!out_) throw IoError("cannot open '" + path.string() + "' for writing");
}

void Writer::header(std::initializer_list<std::string_view> columns) {
  for (auto c : columns) field(c);
  end_row();
}

void Writer::header(const std::vector<std::string>& columns) {
  for (const auto& c : columns) field(std::string_view(c));
  end_row();
}

void Writer::separator() {
  if (row_started_) out_.put(',');
  row_started_ = true;
}

Writer& Writer::field(std::string_view text) {
  separator();
  out_ << text;
  return *this;
}

Writer& Writer::field(double value) {
  separator();
  out_ << format_double(value);
  return *this;
}

Writer& Writer::field(long long value) {
  separator();
  out_ << value;
  return *this;
}

Writer& Writer::empty_field() {
  separator();
  return *this;
}

void Writer::end_row() {
  out_.put('\n');
  row_started_ = false;
}

void Writer::close() {
  out_.flush();
  if (!out_) throw IoError("failed writing '" + path_.string() + "'");
  out_.close();
}

}  // namespace hedgekit::csv
