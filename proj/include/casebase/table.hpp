#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace casebase {

/// Column-typed rectangular table used for every delimited artifact we emit.
class Table {
 public:
  using Column = std::variant<std::vector<double>, std::vector<long long>,
                              std::vector<std::string>>;

  void add_column(std::string name, Column values);

  std::size_t n_rows() const noexcept { return n_rows_; }
  std::size_t n_columns() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const Column& column(std::size_t index) const { return columns_.at(index); }

  /// Cell rendered as text; reals use 17 significant digits so they round-trip.
  std::string cell(std::size_t row, std::size_t column) const;

 private:
  std::vector<std::string> names_;
  std::vector<Column> columns_;
  std::size_t n_rows_ = 0;
};

/// Header plus string cells exactly as read from disk.
struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::ptrdiff_t find(std::string_view name) const;
};

std::string format_real(double value);
bool parse_real(std::string_view text, double& out);

void write_table(const Table& table, const std::filesystem::path& path, char delimiter = ',');
std::string render_table(const Table& table, char delimiter = ',');

RawTable read_table(const std::filesystem::path& path, char delimiter = ',');
RawTable parse_table(std::string_view text, char delimiter = ',');

/// FNV-1a 64 over raw bytes.
std::uint64_t fingerprint_bytes(const void* data, std::size_t size,
                                std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fingerprint_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace casebase
