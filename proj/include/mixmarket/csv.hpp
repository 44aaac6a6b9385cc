#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mixmarket {

/// Input error carrying file and line provenance.
class InputError : public std::runtime_error {
 public:
  InputError(const std::filesystem::path& file, std::size_t line,
             const std::string& message);
  explicit InputError(const std::string& message)
      : std::runtime_error(message) {}

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_ = 0;
};

struct CsvRow {
  std::size_t line = 0;  // 1-based line number in the source file
  std::vector<std::string> cells;
};

/// Comma-separated table with a mandatory header row. Blank lines and lines
/// starting with '#' are skipped. Cells are whitespace-trimmed; no quoting.
struct CsvTable {
  std::filesystem::path path;
  std::vector<std::string> header;
  std::vector<CsvRow> rows;

  /// Column position of `name`, or nullopt.
  std::optional<std::size_t> find(std::string_view name) const;
  /// Column position of `name`; throws InputError pointing at the header.
  std::size_t column(std::string_view name) const;

  double number(const CsvRow& row, std::size_t col) const;
  const std::string& text(const CsvRow& row, std::size_t col) const;
};

CsvTable read_csv(const std::filesystem::path& path);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view line, char sep);

/// Shortest round-trip decimal representation of a double.
std::string format_double(double value);

/// key=value lines; blank lines and '#' comments skipped.
std::map<std::string, std::string> read_config(const std::filesystem::path& path);

}  // namespace mixmarket
