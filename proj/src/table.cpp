#include "casebase/table.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "casebase/error.hpp"

namespace casebase {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::data: return "data";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::io: return "io";
    case ErrorKind::version: return "version";
  }
  return "unknown";
}

void Table::add_column(std::string name, Column values) {
  const std::size_t n = std::visit([](const auto& v) { return v.size(); }, values);
  if (!columns_.empty() && n != n_rows_)
    fail(ErrorKind::invalid_argument,
         "table column '" + name + "' has " + std::to_string(n) + " rows, expected " +
             std::to_string(n_rows_));
  for (const auto& existing : names_)
    if (existing == name) fail(ErrorKind::invalid_argument, "duplicate table column '" + name + "'");
  n_rows_ = n;
  names_.push_back(std::move(name));
  columns_.push_back(std::move(values));
}

std::string format_real(double value) {
  if (std::isnan(value)) return "NaN";
  if (std::isinf(value)) return value > 0 ? "Inf" : "-Inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

bool parse_real(std::string_view text, double& out) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  if (text.empty()) return false;
  if (text == "NaN" || text == "NA") return false;
  if (text == "Inf" || text == "inf") { out = INFINITY; return true; }
  if (text == "-Inf" || text == "-inf") { out = -INFINITY; return true; }
  if (text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::string Table::cell(std::size_t row, std::size_t col) const {
  return std::visit(
      [row](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::vector<double>>) return format_real(v[row]);
        else if constexpr (std::is_same_v<T, std::vector<long long>>) return std::to_string(v[row]);
        else return v[row];
      },
      columns_.at(col));
}

namespace {

void append_field(std::string& out, const std::string& field, char delimiter) {
  const bool quote = field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) != std::string::npos;
  if (!quote) {
    out += field;
    return;
  }
  out += '"';
  for (const char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
}

}  // namespace

std::string render_table(const Table& table, char delimiter) {
  std::string out;
  for (std::size_t c = 0; c < table.n_columns(); ++c) {
    if (c) out += delimiter;
    append_field(out, table.names()[c], delimiter);
  }
  out += '\n';
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    for (std::size_t c = 0; c < table.n_columns(); ++c) {
      if (c) out += delimiter;
      append_field(out, table.cell(r, c), delimiter);
    }
    out += '\n';
  }
  return out;
}

void write_table(const Table& table, const std::filesystem::path& path, char delimiter) {
  write_file(path, render_table(table, delimiter));
}

std::ptrdiff_t RawTable::find(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<std::ptrdiff_t>(i);
  return -1;
}

RawTable parse_table(std::string_view text, char delimiter) {
  RawTable table;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;

  auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
    const bool blank = record.size() == 1 && record[0].empty();
    if (!blank) {
      if (table.header.empty() && table.rows.empty()) {
        table.header = std::move(record);
      } else {
        if (record.size() != table.header.size())
          fail(ErrorKind::data, "line " + std::to_string(line) + ": expected " +
                                    std::to_string(table.header.size()) + " fields, got " +
                                    std::to_string(record.size()));
        table.rows.push_back(std::move(record));
      }
    }
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == delimiter) {
      record.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (c == '\n') {
      end_record();
      ++line;
    } else if (c == '\r') {
      // tolerate CRLF
    } else {
      field += c;
      field_started = true;
    }
  }
  if (in_quotes) fail(ErrorKind::data, "unterminated quoted field");
  if (field_started || !record.empty()) end_record();
  if (table.header.empty()) fail(ErrorKind::data, "table has no header line");
  return table;
}

RawTable read_table(const std::filesystem::path& path, char delimiter) {
  return parse_table(read_file(path), delimiter);
}

std::uint64_t fingerprint_bytes(const void* data, std::size_t size, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fingerprint_file(const std::filesystem::path& path) {
  const std::string contents = read_file(path);
  return fingerprint_bytes(contents.data(), contents.size());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) fail(ErrorKind::io, "write to '" + path.string() + "' failed");
}

}  // namespace casebase
