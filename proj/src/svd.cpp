#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "acpkan/rankdiag.hpp"

namespace acpkan {

DenseMatrix::DenseMatrix(int rows, int cols, double fill)
    : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill) {
  if (rows < 0 || cols < 0) throw std::invalid_argument("DenseMatrix: negative dimension");
}

DenseMatrix::DenseMatrix(int rows, int cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    throw std::invalid_argument("DenseMatrix: value count does not match shape");
  }
}

DenseMatrix DenseMatrix::identity(int n) {
  DenseMatrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::transpose() const {
  DenseMatrix t(cols_, rows_);
  for (int i = 0; i < rows_; ++i) {
    for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  }
  return t;
}

double DenseMatrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::fabs(v));
  return m;
}

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matrix product: dimension mismatch");
  DenseMatrix c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

std::vector<double> singular_values(const DenseMatrix& m, double tolerance, int max_sweeps) {
  for (double v : m.data()) {
    if (!std::isfinite(v)) throw std::invalid_argument("singular_values: non-finite entry");
  }
  // Hestenes: orthogonalize the columns of a tall matrix.
  const DenseMatrix a0 = m.rows() >= m.cols() ? m : m.transpose();
  const int rows = a0.rows(), cols = a0.cols();
  // column-major copy so that column operations are contiguous
  std::vector<std::vector<double>> col(static_cast<std::size_t>(cols), std::vector<double>(static_cast<std::size_t>(rows)));
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) col[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = a0(i, j);
  }

  auto dot = [rows](const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (int i = 0; i < rows; ++i) s += x[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)];
    return s;
  };

  bool converged = cols <= 1;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    converged = true;
    for (int p = 0; p < cols - 1; ++p) {
      for (int q = p + 1; q < cols; ++q) {
        auto& cp = col[static_cast<std::size_t>(p)];
        auto& cq = col[static_cast<std::size_t>(q)];
        const double alpha = dot(cp, cp);
        const double beta = dot(cq, cq);
        const double gamma = dot(cp, cq);
        if (gamma == 0.0 || std::fabs(gamma) <= tolerance * std::sqrt(alpha * beta)) continue;
        converged = false;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (int i = 0; i < rows; ++i) {
          const double xp = cp[static_cast<std::size_t>(i)];
          const double xq = cq[static_cast<std::size_t>(i)];
          cp[static_cast<std::size_t>(i)] = c * xp - s * xq;
          cq[static_cast<std::size_t>(i)] = s * xp + c * xq;
        }
      }
    }
  }
  if (!converged) throw std::runtime_error("singular_values: Jacobi sweeps did not converge");

  std::vector<double> sigma(static_cast<std::size_t>(cols));
  for (int j = 0; j < cols; ++j) {
    sigma[static_cast<std::size_t>(j)] = std::sqrt(dot(col[static_cast<std::size_t>(j)], col[static_cast<std::size_t>(j)]));
  }
  std::sort(sigma.begin(), sigma.end(), std::greater<>());
  return sigma;
}

int numerical_rank(std::span<const double> sigma, double eps) {
  if (sigma.empty() || sigma.front() <= 0.0) return 0;
  const double cut = eps * sigma.front();
  int r = 0;
  for (double s : sigma) r += s >= cut ? 1 : 0;
  return r;
}

int numerical_rank(const DenseMatrix& m, double eps) { return numerical_rank(singular_values(m), eps); }

}  // namespace acpkan
