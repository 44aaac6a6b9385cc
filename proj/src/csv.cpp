#include "mixmarket/csv.hpp"

#include <charconv>
#include <fstream>
#include <limits>

#include <fmt/format.h>

namespace mixmarket {

InputError::InputError(const std::filesystem::path& file, std::size_t line,
                       const std::string& message)
    : std::runtime_error(fmt::format("{}:{}: {}", file.string(), line, message)),
      file_(file.string()),
      line_(line) {}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t begin = 0;
  while (true) {
    const auto end = line.find(sep, begin);
    out.emplace_back(trim(line.substr(begin, end - begin)));
    if (end == std::string_view::npos) break;
    begin = end + 1;
  }
  return out;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path, 0, "cannot open file");
  CsvTable table;
  table.path = path;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    auto cells = split(body, ',');
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw InputError(path, line_no,
                       fmt::format("expected {} cells, found {}",
                                   table.header.size(), cells.size()));
    }
    table.rows.push_back({line_no, std::move(cells)});
  }
  if (!have_header) throw InputError(path, 0, "missing header row");
  return table;
}

std::optional<std::size_t> CsvTable::find(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t CsvTable::column(std::string_view name) const {
  if (auto pos = find(name)) return *pos;
  throw InputError(path, 1, fmt::format("missing column '{}'", name));
}

double CsvTable::number(const CsvRow& row, std::size_t col) const {
  const std::string& cell = row.cells.at(col);
  if (cell.empty()) {
    throw InputError(path, row.line,
                     fmt::format("empty value in column '{}'", header[col]));
  }
  double value = 0.0;
  const char* first = cell.data();
  const char* last = first + cell.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    if (cell == "inf") return std::numeric_limits<double>::infinity();
    if (cell == "-inf") return -std::numeric_limits<double>::infinity();
    throw InputError(path, row.line,
                     fmt::format("malformed number '{}' in column '{}'", cell,
                                 header[col]));
  }
  return value;
}

const std::string& CsvTable::text(const CsvRow& row, std::size_t col) const {
  return row.cells.at(col);
}

std::string format_double(double value) {
  if (value == 0.0) return "0";
  return fmt::format("{}", value);
}

std::map<std::string, std::string> read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path, 0, "cannot open file");
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw InputError(path, line_no, "expected key=value");
    kv[std::string(trim(body.substr(0, eq)))] = std::string(trim(body.substr(eq + 1)));
  }
  return kv;
}

}  // namespace mixmarket
