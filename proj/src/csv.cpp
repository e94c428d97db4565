#include "drdb/csv.hpp"

#include <cmath>
#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "drdb/errors.hpp"

namespace drdb {

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) out.push_back(field);
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_number(const std::string& field, long row, const std::string& col) {
  const std::string v = trim(field);
  double out = 0.0;
  const auto* begin = v.data();
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc() || ptr != end) throw NonFiniteValueError(row, col);
  if (!std::isfinite(out)) throw NonFiniteValueError(row, col);
  return out;
}

}  // namespace

ObservedData load_csv(const std::string& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCategory::validation, "cannot open file: " + path);

  std::string line;
  if (!std::getline(in, line))
    throw Error(ErrorCategory::validation, "empty file: " + path);

  const auto header = split_line(line, options.delimiter);
  int y_col = -1;
  int t_col = -1;
  std::vector<int> x_cols;  // x_cols[j] = column index of x{j+1}
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name = trim(header[c]);
    if (name == "y") {
      y_col = static_cast<int>(c);
    } else if (name == "t") {
      t_col = static_cast<int>(c);
    } else if (name.size() > 1 && name[0] == 'x') {
      int idx = 0;
      const auto* begin = name.data() + 1;
      const auto* end = name.data() + name.size();
      const auto [ptr, ec] = std::from_chars(begin, end, idx);
      if (ec == std::errc() && ptr == end && idx >= 1) {
        if (static_cast<int>(x_cols.size()) < idx) x_cols.resize(idx, -1);
        x_cols[idx - 1] = static_cast<int>(c);
      }
    }
  }
  if (y_col < 0) throw MissingColumnError("y");
  if (t_col < 0) throw MissingColumnError("t");
  for (std::size_t j = 0; j < x_cols.size(); ++j)
    if (x_cols[j] < 0) throw MissingColumnError("x" + std::to_string(j + 1));
  const int p = static_cast<int>(x_cols.size());

  std::vector<double> ys, ts;
  std::vector<double> xs;  // row-major
  long row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_line(line, options.delimiter);
    if (fields.size() != header.size())
      throw Error(ErrorCategory::validation,
                  "row " + std::to_string(row) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(header.size()));
    ys.push_back(parse_number(fields[y_col], row, "y"));
    const double t = parse_number(fields[t_col], row, "t");
    if (t != 0.0 && t != 1.0)
      throw NonBinaryTreatmentError(row, trim(fields[t_col]));
    ts.push_back(t);
    for (int j = 0; j < p; ++j)
      xs.push_back(parse_number(fields[x_cols[j]], row, "x" + std::to_string(j + 1)));
  }
  if (row == 0)
    throw Error(ErrorCategory::validation, "no data rows in " + path);

  const auto n = static_cast<Eigen::Index>(row);
  Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(ys.data(), n);
  Eigen::VectorXd t = Eigen::Map<Eigen::VectorXd>(ts.data(), n);
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) x(i, j) = xs[static_cast<std::size_t>(i) * p + j];
  return ObservedData(std::move(y), std::move(t), std::move(x));
}

}  // namespace drdb
