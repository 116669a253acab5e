#pragma once

// CSV and JSON artifacts: simulation tables, observation sequences, fits,
// test results and confidence sets.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sbim/features.hpp"
#include "sbim/proxy_test.hpp"
#include "sbim/types.hpp"

namespace sbim::io {

using json = nlohmann::ordered_json;

/// 17 significant digits; non-finite values print as "inf", "-inf", "nan".
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline double parse_double(const std::string& s) {
  std::string t = s;
  t.erase(0, t.find_first_not_of(" \t\r"));
  t.erase(t.find_last_not_of(" \t\r") + 1);
  if (t == "inf" || t == "+inf" || t == "Inf") return kInf;
  if (t == "-inf" || t == "-Inf") return -kInf;
  if (t == "nan" || t == "NaN" || t == "NA") return kNaN;
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &pos);
  } catch (const std::exception&) {
    throw DomainError("cannot parse number '" + s + "'");
  }
  if (pos != t.size()) throw DomainError("cannot parse number '" + s + "'");
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  for (auto& c : out) {
    c.erase(0, c.find_first_not_of(" \t\r"));
    c.erase(c.find_last_not_of(" \t\r") + 1);
  }
  return out;
}

// ---- simulation tables ----------------------------------------------------

/// Header theta_1..theta_d,loglik,weight[,block_1..block_K], preceded by a
/// "# n_obs=<n>" comment line when n is known.
inline void write_table_csv(std::ostream& os, const SimLogLikTable& t) {
  if (t.n_obs > 0) os << "# n_obs=" << t.n_obs << '\n';
  for (int k = 0; k < t.d(); ++k) os << "theta_" << (k + 1) << ',';
  os << "loglik,weight";
  const int K = t.per_block_values ? static_cast<int>(t.per_block_values->cols()) : 0;
  for (int k = 0; k < K; ++k) os << ",block_" << (k + 1);
  os << '\n';
  for (int m = 0; m < t.M(); ++m) {
    for (int k = 0; k < t.d(); ++k) os << format_double(t.points(m, k)) << ',';
    os << format_double(t.values(m)) << ',' << format_double(t.weights(m));
    for (int k = 0; k < K; ++k) os << ',' << format_double((*t.per_block_values)(m, k));
    os << '\n';
  }
}

inline SimLogLikTable read_table_csv(std::istream& is) {
  SimLogLikTable t;
  std::string line;
  std::vector<std::string> header;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    if (line[0] == '#') {
      const auto pos = line.find("n_obs=");
      if (pos != std::string::npos) t.n_obs = std::stoi(line.substr(pos + 6));
      continue;
    }
    header = split_csv_line(line);
    break;
  }
  if (header.empty()) throw DomainError("table CSV: missing header");
  int d = 0;
  while (d < static_cast<int>(header.size()) && header[d] == "theta_" + std::to_string(d + 1)) ++d;
  if (d == 0) throw DomainError("table CSV: header must start with theta_1");
  if (static_cast<int>(header.size()) < d + 2 || header[d] != "loglik" || header[d + 1] != "weight")
    throw DomainError("table CSV: expected loglik,weight after the theta columns");
  const int K = static_cast<int>(header.size()) - d - 2;
  for (int k = 0; k < K; ++k)
    if (header[d + 2 + k] != "block_" + std::to_string(k + 1)) throw DomainError("table CSV: bad block column name");

  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r" || line[0] == '#') continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw DomainError("table CSV: row " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                        " fields, expected " + std::to_string(header.size()));
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(parse_double(c));
    rows.push_back(std::move(row));
  }
  const int M = static_cast<int>(rows.size());
  t.points.resize(M, d);
  t.values.resize(M);
  t.weights.resize(M);
  if (K > 0) t.per_block_values = Matrix(M, K);
  for (int m = 0; m < M; ++m) {
    for (int k = 0; k < d; ++k) t.points(m, k) = rows[m][k];
    t.values(m) = rows[m][d];
    t.weights(m) = rows[m][d + 1];
    for (int k = 0; k < K; ++k) (*t.per_block_values)(m, k) = rows[m][d + 2 + k];
  }
  return t;
}

inline SimLogLikTable read_table_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open table file '" + path + "'");
  return read_table_csv(f);
}

// ---- observation sequences -------------------------------------------------

inline void write_observations_csv(std::ostream& os, const std::vector<Vector>& y) {
  const int k = y.empty() ? 1 : static_cast<int>(y.front().size());
  for (int j = 0; j < k; ++j) os << (j ? "," : "") << "y_" << (j + 1);
  os << '\n';
  for (const auto& v : y) {
    for (int j = 0; j < k; ++j) os << (j ? "," : "") << format_double(v(j));
    os << '\n';
  }
}

inline std::vector<Vector> read_observations_csv(std::istream& is) {
  std::string line;
  std::vector<std::string> header;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    header = split_csv_line(line);
    break;
  }
  if (header.empty()) throw DomainError("observation CSV: missing header");
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] != "y_" + std::to_string(j + 1)) throw DomainError("observation CSV: columns must be y_1..y_k");
  std::vector<Vector> y;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r" || line[0] == '#') continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw DomainError("observation CSV: ragged row");
    Vector v(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) v(j) = parse_double(cells[j]);
    y.push_back(v);
  }
  return y;
}

inline std::vector<Vector> read_observations_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open observation file '" + path + "'");
  return read_observations_csv(f);
}

// ---- JSON -----------------------------------------------------------------

/// Non-finite numbers become the strings "inf", "-inf" and "nan".
inline json number(double x) {
  if (std::isfinite(x)) return x;
  return format_double(x);
}

inline json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
  return a;
}

inline json to_json(const Matrix& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(to_json(Vector(m.row(i).transpose())));
  return a;
}

inline json to_json(const MetaFit& f) {
  json j;
  j["a"] = number(f.a);
  j["b"] = to_json(f.b);
  j["c_vech"] = to_json(vech(f.c));
  j["sigma2"] = number(f.sigma2);
  j["M"] = f.M;
  j["d"] = f.d;
  return j;
}

inline json to_json(const TestResult& r) {
  json j;
  j["statistic"] = number(r.statistic);
  j["df1"] = r.df1;
  j["df2"] = number(r.df2);
  j["p_value"] = number(r.p_value);
  j["mllr"] = number(r.mllr);
  return j;
}

inline json to_json(const ConfidenceSet& s) {
  json j;
  j["kind"] = to_string(s.kind);
  json b = json::array();
  for (double v : s.bounds) b.push_back(number(v));
  j["bounds"] = b;
  j["level"] = number(s.level);
  return j;
}

inline json to_json(const ProxyFit& p) {
  json j;
  j["theta_star"] = to_json(p.theta_star);
  j["c_vech"] = to_json(vech(p.c_hat));
  j["sigma2_2nd"] = number(p.sigma2_2nd);
  j["k1_used"] = to_json(p.k1_used);
  j["sigma2_used"] = number(p.sigma2_used);
  j["n_obs"] = p.n_obs;
  j["M"] = p.M;
  j["d"] = p.d;
  return j;
}

inline double json_number(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return parse_double(j.get<std::string>());
  throw DomainError("JSON value is not a number");
}

/// Reads a d x d matrix: a bare number (d = 1), a flat array of length d*d
/// (row-major) or an array of rows. A top-level object may wrap it under "k1".
inline Matrix matrix_from_json(const json& j0) {
  const json& j = (j0.is_object() && j0.contains("k1")) ? j0.at("k1") : j0;
  if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) throw DomainError("matrix JSON: expected a number or an array");
  if (j.front().is_array()) {
    const auto rows = j.size();
    const auto cols = j.front().size();
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
      if (j[r].size() != cols) throw DomainError("matrix JSON: ragged rows");
      for (std::size_t c = 0; c < cols; ++c) m(r, c) = json_number(j[r][c]);
    }
    return m;
  }
  const auto len = j.size();
  const auto d = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(len))));
  if (d * d != len) throw DomainError("matrix JSON: flat array length is not a square");
  Matrix m(d, d);
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < d; ++c) m(r, c) = json_number(j[r * d + c]);
  return m;
}

}  // namespace sbim::io
