#include "transrr/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "transrr/errors.hpp"

namespace transrr {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  cells.push_back(cur);
  return cells;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t')) --end;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end)
    throw InputError("csv: non-numeric cell '" + cell + "' at row " + std::to_string(row) +
                     ", column " + std::to_string(col));
  return value;
}

}  // namespace

Dataset load_data_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("csv: cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw InputError("csv: empty file '" + path.string() + "'");
  const auto header = split_csv_line(line);
  if (header.empty() || header[0] != "y")
    throw InputError("csv: first column must be 'y' in '" + path.string() + "'");
  const std::size_t p = header.size() - 1;
  if (p == 0) throw InputError("csv: no predictor columns in '" + path.string() + "'");

  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != p + 1)
      throw InputError("csv: row " + std::to_string(lineno) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(p + 1));
    std::vector<double> row(p + 1);
    for (std::size_t j = 0; j <= p; ++j) row[j] = parse_cell(cells[j], lineno, j + 1);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError("csv: no data rows in '" + path.string() + "'");

  Dataset data;
  data.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(p));
  data.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    data.y[static_cast<Eigen::Index>(i)] = rows[i][0];
    for (std::size_t j = 0; j < p; ++j)
      data.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j + 1];
  }
  data.validate();
  return data;
}

void save_data_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ostringstream out;
  out << "y";
  for (Eigen::Index j = 0; j < data.p(); ++j) out << ",x" << (j + 1);
  out << "\n";
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    out << format_double(data.y[i]);
    for (Eigen::Index j = 0; j < data.p(); ++j) out << "," << format_double(data.X(i, j));
    out << "\n";
  }
  atomic_write(path, out.str());
}

void atomic_write(const std::filesystem::path& path, const std::string& contents) {
  const auto dir = path.parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("io: cannot write '" + tmp + "'");
    out << contents;
    if (!out) throw InputError("io: short write to '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace transrr
