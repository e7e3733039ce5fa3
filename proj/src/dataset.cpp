#include "meandisp/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "meandisp/errors.hpp"

namespace meandisp {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  for (std::string& f : fields) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return fields;
}

double parse_number(const std::string& field, int row, const std::string& col) {
  if (field.empty())
    throw data_error("missing value in row " + std::to_string(row) +
                     ", column '" + col + "'");
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end)
    throw data_error("malformed number '" + field + "' in row " +
                     std::to_string(row) + ", column '" + col + "'");
  return value;
}

// x1, x2, ... in index order; likewise z1, z2, ...
std::vector<std::string> detect_indexed(const std::vector<std::string>& header,
                                        char prefix) {
  std::map<int, std::string> found;
  for (const std::string& h : header) {
    if (h.size() < 2 || h[0] != prefix) continue;
    bool digits = true;
    for (size_t i = 1; i < h.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(h[i]))) digits = false;
    if (digits) found[std::stoi(h.substr(1))] = h;
  }
  std::vector<std::string> out;
  out.reserve(found.size());
  for (const auto& [idx, name] : found) out.push_back(name);
  return out;
}

int column_of(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end())
    throw data_error("required column '" + name + "' not found in header");
  return static_cast<int>(it - header.begin());
}

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open '" + path + "'");

  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    rows.push_back(split_line(line));
  }
  if (rows.empty()) throw data_error("'" + path + "' is empty");
  if (rows.size() == 1)
    throw data_error("'" + path + "' has a header but no data rows");

  const std::vector<std::string> header = rows.front();
  std::vector<std::string> mix_cols =
      schema.mixture.empty() ? detect_indexed(header, 'x') : schema.mixture;
  std::vector<std::string> proc_cols =
      schema.process.empty() ? detect_indexed(header, 'z') : schema.process;
  if (mix_cols.size() < 2)
    throw data_error("need at least 2 mixture columns, found " +
                     std::to_string(mix_cols.size()));

  const int y_col = column_of(header, schema.response);
  std::vector<int> mix_idx, proc_idx;
  for (const std::string& c : mix_cols) mix_idx.push_back(column_of(header, c));
  for (const std::string& c : proc_cols)
    proc_idx.push_back(column_of(header, c));

  int id_col = -1;
  if (!schema.id.empty()) {
    id_col = column_of(header, schema.id);
  } else {
    const auto it = std::find(header.begin(), header.end(), "run");
    if (it != header.end()) id_col = static_cast<int>(it - header.begin());
  }

  const int n = static_cast<int>(rows.size()) - 1;
  const int a = static_cast<int>(mix_cols.size());
  const int r = static_cast<int>(proc_cols.size());
  Eigen::MatrixXd mixture(n, a);
  Eigen::MatrixXd process(n, r);
  Eigen::VectorXd y(n);
  std::vector<std::string> ids(static_cast<size_t>(n));

  for (int i = 0; i < n; ++i) {
    const auto& fields = rows[static_cast<size_t>(i) + 1];
    const int row_no = i + 2;  // 1-based file line, after the header
    if (fields.size() != header.size())
      throw data_error("row " + std::to_string(row_no) + " has " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(header.size()));
    y[i] = parse_number(fields[static_cast<size_t>(y_col)], row_no,
                        schema.response);
    for (int j = 0; j < a; ++j)
      mixture(i, j) = parse_number(fields[static_cast<size_t>(mix_idx[j])],
                                   row_no, mix_cols[static_cast<size_t>(j)]);
    for (int j = 0; j < r; ++j)
      process(i, j) = parse_number(fields[static_cast<size_t>(proc_idx[j])],
                                   row_no, proc_cols[static_cast<size_t>(j)]);
    ids[static_cast<size_t>(i)] =
        id_col >= 0 ? fields[static_cast<size_t>(id_col)]
                    : std::to_string(i + 1);
  }

  VariableSet vars;
  vars.mixture = mix_cols;
  vars.process = proc_cols;
  DesignTable design(vars, std::move(mixture), std::move(process),
                     schema.sum_tol);
  return Dataset{std::move(design), std::move(y), std::move(ids)};
}

std::string dataset_to_csv(const Dataset& data) {
  std::ostringstream out;
  out << "run";
  for (const std::string& c : data.design.vars.mixture) out << ',' << c;
  for (const std::string& c : data.design.vars.process) out << ',' << c;
  out << ",y\n";
  for (int i = 0; i < data.n(); ++i) {
    out << data.row_ids[static_cast<size_t>(i)];
    for (int j = 0; j < data.design.vars.n_mixture(); ++j)
      out << ',' << format_value(data.design.mixture(i, j));
    for (int j = 0; j < data.design.vars.n_process(); ++j)
      out << ',' << format_value(data.design.process(i, j));
    out << ',' << format_value(data.y[i]) << '\n';
  }
  return out.str();
}

void save_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write '" + path + "'");
  out << dataset_to_csv(data);
  if (!out) throw data_error("failed while writing '" + path + "'");
}

std::uint64_t fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open '" + path + "'");
  std::uint64_t hash = 14695981039346656037ull;
  char c;
  while (in.get(c)) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 1099511628211ull;
  }
  return hash;
}

}  // namespace meandisp
