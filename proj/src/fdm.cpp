#include <cmath>
#include <stdexcept>
#include <string>

#include "acpkan/pde.hpp"

namespace acpkan {

double FdmField::x(int i) const { return mask.x_min + (mask.x_max - mask.x_min) * i / (n - 1); }
double FdmField::y(int j) const { return mask.y_min + (mask.y_max - mask.y_min) * j / (n - 1); }

double gauss_seidel_sweep(FdmField& f) {
  const int n = f.n;
  double max_update = 0.0;
  for (int j = 1; j < n - 1; ++j) {
    for (int i = 1; i < n - 1; ++i) {
      const std::size_t k = static_cast<std::size_t>(j * n + i);
      if (f.fixed[k]) continue;
      const double next = 0.25 * (f.values[k - 1] + f.values[k + 1] + f.values[k - static_cast<std::size_t>(n)] +
                                  f.values[k + static_cast<std::size_t>(n)]);
      max_update = std::max(max_update, std::fabs(next - f.values[k]));
      f.values[k] = next;
    }
  }
  return max_update;
}

FdmField fdm_oracle_laplace(const GeometryMask& mask, int n, double tolerance, std::size_t max_sweeps,
                            double outer_value, double hole_value) {
  mask.validate();
  if (n < 3) throw std::invalid_argument("fdm_oracle_laplace: n must be at least 3");
  if (!(tolerance > 0.0)) throw std::invalid_argument("fdm_oracle_laplace: tolerance must be positive");

  FdmField f;
  f.n = n;
  f.mask = mask;
  const std::size_t total = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  f.values.assign(total, 0.0);
  f.fixed.assign(total, 0);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const std::size_t k = static_cast<std::size_t>(j * n + i);
      if (i == 0 || j == 0 || i == n - 1 || j == n - 1) {
        f.fixed[k] = 1;
        f.values[k] = outer_value;
      } else if (mask.excluded(f.x(i), f.y(j))) {
        f.fixed[k] = 1;
        f.values[k] = hole_value;
      }
    }
  }

  double prev = 0.0;
  while (f.sweeps < max_sweeps) {
    const double upd = gauss_seidel_sweep(f);
    ++f.sweeps;
    if (upd == 0.0) return f;
    // geometric tail estimate from the contraction ratio of successive updates
    if (upd < tolerance && prev > 0.0) {
      const double q = upd / prev;
      if (q < 1.0 && upd * q / (1.0 - q) < tolerance) return f;
    }
    prev = upd;
  }
  throw std::runtime_error("fdm_oracle_laplace: no convergence after " + std::to_string(max_sweeps) + " sweeps");
}

}  // namespace acpkan
