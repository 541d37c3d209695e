#pragma once

#include <functional>

namespace dinilab {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;  // estimated absolute error
  int panels = 0;      // accepted Gauss-Kronrod panels
  bool converged = true;
};

struct QuadratureOptions {
  double rel_tol = 1e-10;
  double abs_tol = 0.0;
  int max_panels = 4000;
};

/// Adaptive 7/15-point Gauss-Kronrod with global bisection of the worst panel.
/// Integrates over [a, b] with a <= b; a == b returns zero.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureOptions& opts = {});

/// Single G7/K15 panel; returns the Kronrod estimate and sets err to |K15 - G7|.
double gauss_kronrod_15(const std::function<double(double)>& f, double a, double b, double& err);

}  // namespace dinilab
