#include "imblr/cli/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "imblr/cli/report.hpp"
#include "imblr/error.hpp"

namespace imblr::cli {

namespace {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<int> line_numbers;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

[[noreturn]] void parse_error(const std::string& source, int line, const std::string& what) {
  throw Error(ErrorCode::ParseError, source + ":" + std::to_string(line) + ": " + what);
}

Table parse_table(const std::string& text, const std::string& source) {
  Table t;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++number;
    if (number == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (!have_header) {
      t.header = fields;
      for (const auto& name : t.header) {
        if (name.empty()) parse_error(source, number, "empty column name in header");
      }
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size()) {
      parse_error(source, number,
                  "expected " + std::to_string(t.header.size()) + " fields, found " +
                      std::to_string(fields.size()));
    }
    std::vector<double> row(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const std::string& f = fields[i];
      const auto res = std::from_chars(f.data(), f.data() + f.size(), row[i]);
      if (f.empty() || res.ec != std::errc() || res.ptr != f.data() + f.size() ||
          !std::isfinite(row[i])) {
        parse_error(source, number,
                    "column '" + t.header[i] + "': '" + f + "' is not a finite number");
      }
    }
    t.rows.push_back(std::move(row));
    t.line_numbers.push_back(number);
  }
  if (!have_header) throw Error(ErrorCode::ParseError, source + ": missing header line");
  if (t.rows.empty()) throw Error(ErrorCode::EmptyInput, source + ": no data rows");
  return t;
}

std::ptrdiff_t column_index(const Table& t, const std::string& name) {
  const auto it = std::find(t.header.begin(), t.header.end(), name);
  return it == t.header.end() ? -1 : it - t.header.begin();
}

int parse_label(double v, const std::string& source, int line) {
  if (v == 0.0) return 0;
  if (v == 1.0) return 1;
  parse_error(source, line, "label y must be 0 or 1");
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Matrix Dataset::rows_with_label(int label) const {
  std::vector<double> data;
  std::size_t count = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != label) continue;
    const auto row = features.row(i);
    data.insert(data.end(), row.begin(), row.end());
    ++count;
  }
  return Matrix::from_rows(count, dim(), std::move(data));
}

Dataset parse_dataset(const std::string& text, const std::string& source) {
  const Table t = parse_table(text, source);
  if (t.header.front() != "y") {
    if (column_index(t, "y") < 0) {
      throw Error(ErrorCode::ParseError, source + ":1: missing label column 'y'");
    }
    throw Error(ErrorCode::ParseError, source + ":1: label column 'y' must come first");
  }
  const std::size_t d = t.header.size() - 1;
  if (d == 0) throw Error(ErrorCode::ParseError, source + ":1: missing feature column 'x1'");
  for (std::size_t k = 1; k <= d; ++k) {
    const std::string want = "x" + std::to_string(k);
    if (t.header[k] != want) {
      throw Error(ErrorCode::ParseError,
                  source + ":1: missing column '" + want + "' (found '" + t.header[k] + "')");
    }
  }
  Dataset out;
  std::vector<double> values;
  values.reserve(t.rows.size() * d);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    out.labels.push_back(parse_label(t.rows[i][0], source, t.line_numbers[i]));
    values.insert(values.end(), t.rows[i].begin() + 1, t.rows[i].end());
  }
  out.features = Matrix::from_rows(t.rows.size(), d, std::move(values));
  return out;
}

Dataset read_dataset(const std::string& path) { return parse_dataset(read_file(path), path); }

void write_dataset(std::ostream& out, const Dataset& data) {
  out << "y";
  for (std::size_t k = 1; k <= data.dim(); ++k) out << ",x" << k;
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.labels[i];
    for (double v : data.features.row(i)) out << ',' << machine(v);
    out << '\n';
  }
}

Matrix read_points(const std::string& path, int label) {
  const Table t = parse_table(read_file(path), path);
  const std::ptrdiff_t y = column_index(t, "y");
  const std::size_t d = t.header.size() - (y >= 0 ? 1 : 0);
  if (d == 0) throw Error(ErrorCode::ParseError, path + ":1: no coordinate columns");
  std::vector<double> values;
  std::size_t count = 0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (y >= 0 && parse_label(t.rows[i][y], path, t.line_numbers[i]) != label) continue;
    for (std::size_t k = 0; k < t.header.size(); ++k) {
      if (static_cast<std::ptrdiff_t>(k) != y) values.push_back(t.rows[i][k]);
    }
    ++count;
  }
  if (count == 0) {
    throw Error(ErrorCode::EmptyInput, path + ": no rows with y = " + std::to_string(label));
  }
  return Matrix::from_rows(count, d, std::move(values));
}

DensityTable read_density_table(const std::string& path) {
  const Table t = parse_table(read_file(path), path);
  const std::ptrdiff_t xi = column_index(t, "x");
  const std::ptrdiff_t fi = column_index(t, "density");
  if (xi < 0) throw Error(ErrorCode::ParseError, path + ":1: missing column 'x'");
  if (fi < 0) throw Error(ErrorCode::ParseError, path + ":1: missing column 'density'");
  DensityTable table;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const double x = t.rows[i][xi];
    const double f = t.rows[i][fi];
    if (!table.x.empty() && !(x > table.x.back())) {
      parse_error(path, t.line_numbers[i], "x must be strictly increasing");
    }
    if (f < 0.0) parse_error(path, t.line_numbers[i], "density must be non-negative");
    table.x.push_back(x);
    table.density.push_back(f);
  }
  if (table.x.size() < 2) throw Error(ErrorCode::EmptyInput, path + ": need at least two rows");
  return normalized(std::move(table));
}

DensityTable normalized(DensityTable table) {
  double area = 0.0;
  for (std::size_t i = 1; i < table.x.size(); ++i) {
    area += 0.5 * (table.x[i] - table.x[i - 1]) * (table.density[i] + table.density[i - 1]);
  }
  if (!(area > 0.0)) throw Error(ErrorCode::InvalidModel, "tabulated density has zero mass");
  for (double& f : table.density) f /= area;
  return table;
}

double interpolate(const DensityTable& table, double value) {
  const auto& x = table.x;
  if (!(value >= x.front() && value <= x.back())) return 0.0;
  auto it = std::upper_bound(x.begin(), x.end(), value);
  if (it == x.end()) return table.density.back();
  const std::size_t hi = static_cast<std::size_t>(it - x.begin());
  const std::size_t lo = hi - 1;
  const double w = (value - x[lo]) / (x[hi] - x[lo]);
  return (1.0 - w) * table.density[lo] + w * table.density[hi];
}

}  // namespace imblr::cli
