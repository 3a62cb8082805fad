#include "vrim/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "vrim/core/rng.hpp"

namespace vrim {

namespace {

struct RawTable {
  std::vector<std::vector<double>> rows;
  int cols = 0;
};

RawTable read_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DatasetError("cannot open " + file.string());
  RawTable t;
  std::string line;
  if (!std::getline(in, line))
    throw DatasetError("empty file " + file.string());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw DatasetError("non-numeric cell in " + file.string());
      }
    }
    if (t.cols == 0)
      t.cols = static_cast<int>(row.size());
    else if (static_cast<int>(row.size()) != t.cols)
      throw DatasetError("ragged rows in " + file.string());
    if (!std::all_of(row.begin(), row.end(),
                     [](double v) { return std::isfinite(v); }))
      throw DatasetError("non-finite value in " + file.string());
    t.rows.push_back(std::move(row));
  }
  if (t.rows.empty() || t.cols < 2)
    throw DatasetError("need at least one data row and two columns in " +
                       file.string());
  return t;
}

void standardize_columns(Matrix& X) {
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double mean = X.col(j).mean();
    double sd = std::sqrt((X.col(j).array() - mean).square().sum() /
                          static_cast<double>(X.rows()));
    if (sd < 1e-12) sd = 1.0;
    X.col(j) = (X.col(j).array() - mean) / sd;
  }
}

// Expected (rows, model dimension) for the bundled files; d counts the
// intercept for the logistic sets.
const std::map<std::string, std::pair<int, int>>& expected_shapes() {
  static const std::map<std::string, std::pair<int, int>> shapes = {
      {"ripley", {250, 3}},  {"pima", {532, 8}},     {"heart", {270, 14}},
      {"german", {1000, 25}}, {"boston", {455, 13}}, {"pendulum", {315, 9}},
  };
  return shapes;
}

void check_shape(const std::filesystem::path& file, int n, int d) {
  const std::string stem = file.stem().string();
  auto it = expected_shapes().find(stem);
  if (it == expected_shapes().end()) return;
  if (it->second.first != n || it->second.second != d)
    std::fprintf(stderr,
                 "warning: %s has %dx%d, expected %dx%d for this dataset\n",
                 file.string().c_str(), n, d, it->second.first,
                 it->second.second);
}

}  // namespace

LogisticData load_logistic_csv(const std::filesystem::path& file,
                               bool standardize) {
  RawTable t = read_csv(file);
  const int n = static_cast<int>(t.rows.size());
  const int p = t.cols - 1;
  Matrix F(n, p);
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) F(i, j) = t.rows[i][j];
    y(i) = t.rows[i][p];
    if (y(i) != 0.0 && y(i) != 1.0)
      throw DatasetError("labels must be 0/1 in " + file.string());
  }
  if (standardize) standardize_columns(F);
  LogisticData d;
  d.X.resize(n, p + 1);
  d.X.col(0).setOnes();
  d.X.rightCols(p) = F;
  d.y = y;
  if (n < d.X.cols()) throw DatasetError("fewer rows than columns in " + file.string());
  check_shape(file, n, p + 1);
  return d;
}

GpData load_gp_csv(const std::filesystem::path& file, bool standardize) {
  RawTable t = read_csv(file);
  const int n = static_cast<int>(t.rows.size());
  const int p = t.cols - 1;
  if (n < 2) throw DatasetError("need at least two rows in " + file.string());
  GpData d;
  d.X.resize(n, p);
  d.y.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) d.X(i, j) = t.rows[i][j];
    d.y(i) = t.rows[i][p];
  }
  if (standardize) {
    standardize_columns(d.X);
    d.y.array() -= d.y.mean();
  }
  check_shape(file, n, p);
  return d;
}

GpData gp_head(const GpData& data, int n) {
  if (n <= 0 || n >= data.X.rows()) return data;
  GpData out;
  out.X = data.X.topRows(n);
  out.y = data.y.head(n);
  out.y.array() -= out.y.mean();
  return out;
}

namespace {

void write_csv(const std::filesystem::path& file, const Matrix& X,
               const Vector& y, const std::string& response_name,
               bool binary) {
  std::ofstream out(file);
  if (!out) throw DatasetError("cannot write " + file.string());
  for (Eigen::Index j = 0; j < X.cols(); ++j) out << "x" << j + 1 << ",";
  out << response_name << "\n";
  char buf[64];
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.10g", X(i, j));
      out << buf << ",";
    }
    if (binary)
      out << static_cast<int>(y(i));
    else {
      std::snprintf(buf, sizeof buf, "%.10g", y(i));
      out << buf;
    }
    out << "\n";
  }
}

// Binary labels from a logistic model over mildly correlated inputs; the
// resulting posteriors are unimodal with the usual benchmark geometry.
void gen_logistic(const std::filesystem::path& file, int n, int p,
                  std::uint64_t stream) {
  RngStream rng(20240614, stream);
  Matrix X(n, p);
  Vector beta(p + 1);
  beta(0) = 0.3;
  for (int j = 0; j < p; ++j)
    beta(j + 1) = (j % 3 == 2 ? -1.0 : 1.0) * (0.4 + 1.2 / (1.0 + j));
  Vector common(n);
  for (int i = 0; i < n; ++i) common(i) = rng.normal();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j)
      X(i, j) = 0.8 * rng.normal() + 0.4 * common(i);
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    double eta = beta(0);
    for (int j = 0; j < p; ++j) eta += beta(j + 1) * X(i, j);
    const double prob = 1.0 / (1.0 + std::exp(-eta));
    y(i) = rng.uniform_co() < prob ? 1.0 : 0.0;
  }
  write_csv(file, X, y, "label", true);
}

// Smooth nonlinear response with additive noise; a squared-exponential GP
// fits it with mid-range hyperparameters.
void gen_gp(const std::filesystem::path& file, int n, int p,
            std::uint64_t stream) {
  RngStream rng(20240614, stream);
  Matrix X(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) X(i, j) = rng.normal();
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    double f = std::sin(1.3 * X(i, 0)) + 0.7 * std::cos(0.9 * X(i, 1)) +
               0.5 * X(i, 2 % p) * X(i, std::min(3, p - 1)) +
               0.3 * X(i, std::min(4, p - 1));
    y(i) = 2.0 * f + 0.4 * rng.normal();
  }
  write_csv(file, X, y, "y", false);
}

}  // namespace

void write_standin_datasets(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  gen_logistic(dir / "ripley.csv", 250, 2, 11);
  gen_logistic(dir / "pima.csv", 532, 7, 12);
  gen_logistic(dir / "heart.csv", 270, 13, 13);
  gen_logistic(dir / "german.csv", 1000, 24, 14);
  gen_gp(dir / "boston.csv", 455, 13, 15);
  gen_gp(dir / "pendulum.csv", 315, 9, 16);
}

}  // namespace vrim
