#include "tvs/csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "tvs/common.hpp"

namespace tvs {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

Dataset dataset_from_csv(const std::string& text, const std::string& response_name) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw data_error("csv: empty input");
  std::vector<std::string> header = split_line(line);
  int resp_col = -1;
  for (size_t j = 0; j < header.size(); ++j)
    if (header[j] == response_name) resp_col = static_cast<int>(j);
  if (resp_col < 0) throw data_error("csv: response column '" + response_name + "' not found");

  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size())
      throw data_error("csv: line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                       " fields, expected " + std::to_string(header.size()));
    std::vector<double> vals(cells.size());
    for (size_t j = 0; j < cells.size(); ++j) {
      char* end = nullptr;
      vals[j] = std::strtod(cells[j].c_str(), &end);
      if (end == cells[j].c_str() || *end != '\0' || !std::isfinite(vals[j]))
        throw data_error("csv: line " + std::to_string(lineno) + ", column '" + header[j] +
                         "': cannot parse '" + cells[j] + "'");
    }
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw data_error("csv: no data rows");

  Dataset ds;
  ds.response_name = response_name;
  const int n = static_cast<int>(rows.size());
  const int d = static_cast<int>(header.size()) - 1;
  ds.x = Matrix(n, d);
  ds.y.resize(n);
  for (size_t j = 0; j < header.size(); ++j)
    if (static_cast<int>(j) != resp_col) ds.names.push_back(header[j]);
  for (int i = 0; i < n; ++i) {
    int c = 0;
    for (size_t j = 0; j < header.size(); ++j) {
      if (static_cast<int>(j) == resp_col)
        ds.y[i] = rows[i][j];
      else
        ds.x(i, c++) = rows[i][j];
    }
  }
  return ds;
}

Dataset read_csv(const std::string& path, const std::string& response_name) {
  std::ifstream f(path);
  if (!f) throw data_error("csv: cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return dataset_from_csv(ss.str(), response_name);
}

std::string dataset_to_csv(const Dataset& data) {
  std::ostringstream out;
  for (size_t j = 0; j < data.names.size(); ++j) out << data.names[j] << ',';
  out << data.response_name << '\n';
  char buf[64];
  for (int i = 0; i < data.n_rows(); ++i) {
    for (int j = 0; j < data.n_cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", data.x(i, j));
      out << buf << ',';
    }
    std::snprintf(buf, sizeof(buf), "%.17g", data.y[i]);
    out << buf << '\n';
  }
  return out.str();
}

void write_csv(const Dataset& data, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw data_error("csv: cannot open '" + path + "' for writing");
  f << dataset_to_csv(data);
}

}  // namespace tvs
