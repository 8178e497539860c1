#pragma once

#include <cstdint>

#include "acpkan/model.hpp"
#include "acpkan/pde.hpp"

namespace acpkan {

struct GradcheckOptions {
  /// Parameters compared against central differences (all when 0).
  std::size_t max_params = 256;
  double h_param = 1e-6;
  double h_first = 1e-5;
  double h_second = 1e-4;
  /// Input points for the jet derivative checks.
  int jet_points = 4;
  std::uint64_t seed = 0;
};

struct GradcheckReport {
  std::size_t params_checked = 0;
  /// max |analytic - fd| / max(|analytic|, |fd|, 1e-4) over checked parameters.
  double param_rel_error = 0.0;
  /// max |jet - fd| / max(|fd|, 1) over first / second input derivatives.
  double jet_first_error = 0.0;
  double jet_second_error = 0.0;

  bool passed(double param_tol = 1e-5, double jet_tol = 1e-4) const {
    return param_rel_error < param_tol && jet_first_error < jet_tol && jet_second_error < jet_tol;
  }
};

/// Compares the parameter gradient of the weighted multi-term loss (fixed
/// random RBA weights and term factors) with central differences, and the
/// model's first and second input derivatives with finite differences of the
/// plain forward pass. Parameters are a seeded subset covering every tensor.
GradcheckReport run_gradcheck(const Network& model, const PdeProblem& problem, const GradcheckOptions& options = {});

}  // namespace acpkan
