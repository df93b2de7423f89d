#include "subdrift/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace subdrift {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string{} : field.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

FiniteKernel::FiniteKernel(Eigen::MatrixXd matrix, std::vector<std::string> labels)
    : matrix_(std::move(matrix)), labels_(std::move(labels)) {
  const auto n = matrix_.rows();
  if (n == 0 || matrix_.cols() != n) throw contract_error("finite kernel: matrix must be square");
  if (labels_.empty()) {
    for (Eigen::Index i = 0; i < n; ++i) labels_.push_back(std::to_string(i));
  }
  if (static_cast<Eigen::Index>(labels_.size()) != n) {
    throw contract_error("finite kernel: label count does not match matrix size");
  }
  rows_.resize(static_cast<std::size_t>(n));
  cumulative_.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double p = matrix_(i, j);
      if (!std::isfinite(p) || p < 0.0) {
        throw contract_error("finite kernel: entry (" + std::to_string(i) + "," +
                             std::to_string(j) + ") is not a probability");
      }
      if (p > 0.0) {
        rows_[i].push_back({static_cast<std::int64_t>(j), p});
        sum += p;
        cumulative_[i].push_back(sum);
      }
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw contract_error("finite kernel: row " + std::to_string(i) + " sums to " +
                           describe(sum));
    }
  }
}

FiniteKernel FiniteKernel::from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw contract_error("cannot open matrix file " + path);
  std::string line;
  std::vector<std::string> labels;
  while (std::getline(in, line) && labels.empty()) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    labels = split_csv_line(line);
  }
  const auto n = static_cast<Eigen::Index>(labels.size());
  if (n == 0) throw contract_error(path + ": missing header row");
  // A header with an empty first cell labels a leading label column.
  const bool label_column = labels.front().empty();
  if (label_column) labels.erase(labels.begin());
  const auto size = static_cast<Eigen::Index>(labels.size());
  Eigen::MatrixXd m(size, size);
  Eigen::Index row = 0;
  int line_no = 1;
  do {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_csv_line(line);
    if (label_column || static_cast<Eigen::Index>(fields.size()) == size + 1) {
      fields.erase(fields.begin());
    }
    if (static_cast<Eigen::Index>(fields.size()) != size) {
      throw contract_error(path + ":" + std::to_string(line_no) + ": expected " +
                           std::to_string(size) + " probabilities");
    }
    if (row >= size) throw contract_error(path + ":" + std::to_string(line_no) + ": too many rows");
    for (Eigen::Index j = 0; j < size; ++j) {
      try {
        std::size_t used = 0;
        m(row, j) = std::stod(fields[static_cast<std::size_t>(j)], &used);
        if (used != fields[static_cast<std::size_t>(j)].size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw contract_error(path + ":" + std::to_string(line_no) + ": bad number '" +
                             fields[static_cast<std::size_t>(j)] + "'");
      }
    }
    ++row;
  } while (std::getline(in, line));
  if (row != size) throw contract_error(path + ": expected " + std::to_string(size) + " rows");
  (void)n;
  return FiniteKernel(std::move(m), std::move(labels));
}

std::int64_t FiniteKernel::sample(std::int64_t x, RngStream& rng) const {
  const auto& cum = cumulative_[static_cast<std::size_t>(x)];
  const auto& row = rows_[static_cast<std::size_t>(x)];
  const double u = rng.uniform() * cum.back();
  const auto it = std::upper_bound(cum.begin(), cum.end(), u);
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), row.size() - 1);
  return row[k].to;
}

Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& p, std::int64_t n) {
  if (n < 0) throw contract_error("matrix_power: n must be >= 0");
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(p.rows(), p.cols());
  Eigen::MatrixXd base = p;
  while (n > 0) {
    if (n & 1) result = result * base;
    n >>= 1;
    if (n > 0) base = base * base;
  }
  return result;
}

Eigen::VectorXd matrix_power_distribution(const FiniteKernel& kernel, std::int64_t x,
                                          std::int64_t n) {
  if (!kernel.contains(x)) throw contract_error("matrix_power_distribution: state out of range");
  Eigen::VectorXd row = matrix_power(kernel.matrix(), n).row(x).transpose();
  if (std::abs(row.sum() - 1.0) > 1e-10) {
    throw std::runtime_error("matrix_power_distribution: row mass drifted to " +
                             describe(row.sum()));
  }
  return row;
}

Eigen::VectorXd stationary_distribution(const FiniteKernel& kernel) {
  // Solve pi (P - I) = 0 with sum(pi) = 1 by replacing one equation.
  const auto n = kernel.size();
  Eigen::MatrixXd a = (kernel.matrix() - Eigen::MatrixXd::Identity(n, n)).transpose();
  a.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  return a.fullPivLu().solve(rhs);
}

FiniteKernel swap_kernel() {
  Eigen::MatrixXd m(2, 2);
  m << 0.0, 1.0, 1.0, 0.0;
  return FiniteKernel(std::move(m));
}

FiniteKernel lazy_birth_death(std::int64_t n, double p_up, double p_down) {
  if (n < 2 || p_up < 0 || p_down < 0 || p_up + p_down > 1.0) {
    throw contract_error("lazy_birth_death: need n >= 2 and p_up + p_down <= 1");
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (std::int64_t i = 0; i < n; ++i) {
    double hold = 1.0 - p_up - p_down;
    if (i + 1 < n) {
      m(i, i + 1) = p_up;
    } else {
      hold += p_up;
    }
    if (i > 0) {
      m(i, i - 1) = p_down;
    } else {
      hold += p_down;
    }
    m(i, i) = hold;
  }
  return FiniteKernel(std::move(m));
}

BirthDeathKernel::BirthDeathKernel(double d, double s, std::optional<std::int64_t> upper)
    : d_(d), s_(s), upper_(upper) {
  if (!(d >= 0.0) || !(s > 2.0 * d) || !(s > 0.0)) {
    throw contract_error("birth-death kernel: need d >= 0 and s > 2d so that p(0) > 0");
  }
  if (upper_ && *upper_ < 1) throw contract_error("birth-death kernel: upper bound must be >= 1");
}

std::array<Transition<std::int64_t>, 2> BirthDeathKernel::transitions(std::int64_t x) const {
  const double p = up_probability(x);
  const std::int64_t up = (upper_ && x >= *upper_) ? x : x + 1;
  const std::int64_t down = x > 0 ? x - 1 : 0;
  return {Transition<std::int64_t>{up, p}, Transition<std::int64_t>{down, 1.0 - p}};
}

std::int64_t BirthDeathKernel::sample(std::int64_t x, RngStream& rng) const {
  const auto t = transitions(x);
  return rng.uniform() < t[0].prob ? t[0].to : t[1].to;
}

}  // namespace subdrift
