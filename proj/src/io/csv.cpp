#include "bayesgam/io/csv.hpp"

#include "bayesgam/errors.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <system_error>

namespace bayesgam::io {

namespace {

std::string trim(std::string s) {
  const char* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(ws);
  s = s.substr(b, e - b + 1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& text, const std::string& where) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || text.empty()) throw SchemaError("SchemaError: " + where + ": '" + text + "' is not a number");
  return v;
}

}  // namespace

DataTable parse_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    header = split(line);
    break;
  }
  if (header.empty()) throw EmptyData("EmptyData: " + source + " has no header row");
  std::vector<std::vector<double>> cols(header.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw SchemaError("SchemaError: " + source + " line " + std::to_string(line_no) + " has " +
                        std::to_string(cells.size()) + " fields, expected " + std::to_string(header.size()));
    for (std::size_t c = 0; c < cells.size(); ++c)
      cols[c].push_back(parse_number(cells[c], source + " line " + std::to_string(line_no) + " column '" + header[c] + "'"));
  }
  DataTable table;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (table.has(header[c])) throw SchemaError("SchemaError: " + source + " repeats column '" + header[c] + "'");
    table.add(header[c], Eigen::Map<const Vector>(cols[c].data(), static_cast<Index>(cols[c].size())));
  }
  return table;
}

DataTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  return parse_csv(in, path);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  if (ec != std::errc()) throw Error("number formatting failed");
  return std::string(buf, ptr);
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw Error("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot move output into place at '" + path + "': " + ec.message());
  }
}

std::string format_table(const std::vector<std::string>& header, const std::vector<Vector>& columns) {
  if (header.size() != columns.size()) throw InvalidArgument("format_table: header and column counts differ");
  std::string out;
  for (std::size_t c = 0; c < header.size(); ++c) out += (c ? "," : "") + header[c];
  out += '\n';
  const Index rows = columns.empty() ? 0 : columns.front().size();
  for (const auto& col : columns)
    if (col.size() != rows) throw InvalidArgument("format_table: columns differ in length");
  for (Index r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) out += ',';
      out += format_double(columns[c](r));
    }
    out += '\n';
  }
  return out;
}

}  // namespace bayesgam::io
