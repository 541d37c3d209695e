#pragma once

#include <functional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "dinilab/dini.hpp"
#include "dinilab/potentials.hpp"

namespace dinilab {

struct KernelPoint {
  int N = 2;
  std::vector<double> x;  // interior point, x_N > 0
  std::vector<double> z;  // boundary point, z_N = 0
};

/// c_N = pi^{-N/2} Gamma(N/2).
double poisson_constant(int N);

/// Half-space Poisson kernel c_N x_N |x - z|^{-N}.
double poisson_kernel(const KernelPoint& pt);

/// Mass of P0((0, x_N), .) over boundary points with |z| <= R; tends to 1 as R/x_N -> inf.
double kernel_normalization(int N, double x_N, double R);

struct IntegrabilityResult {
  bool finite = false;
  double value = 0.0;  // integral estimate (finite only)
  double error = 0.0;
  double fitted_ratio = 0.0;
  int shells_used = 0;
  std::vector<double> shells;  // contribution of r in [R 2^{-k-1}, R 2^{-k}]
};

struct IntegrabilityOptions {
  int max_shells = 400;
  double rel_tol = 1e-6;
  DecayPolicy policy;
};

/// int_{|x-a|<R, x_N>0} H(x) P0(x, a)^p x_N dx by polar quadrature on dyadic annuli about a,
/// classified with the shell-decay policy. N in {2, 3}; a must lie on the degeneracy set.
/// Throws IndeterminateError if no verdict is reached.
IntegrabilityResult mv_integrability(int N, double p, const AbsorptionPotential& pot, double R,
                                     std::span<const double> a, const IntegrabilityOptions& opts = {});

/// 1 + 2/(N-1).
double p_critical(int N);

/// A x^{-m}, m = 2/(p-1), A = (m(m+1)/h)^{1/(p-1)}: solves -u'' + h u^p = 0 with u(0+) = inf.
double exact_1d_blowup(double p, double h_const, double x);

struct EigenPair {
  int N = 2;
  double lambda1 = 0.0;
  std::vector<double> y_tilde;  // argmax of psi1 in the cross-section
  /// psi1 on the (N-1)-dimensional half-ball, max 1; zero outside.
  std::function<double(std::span<const double>)> psi1;
};

/// First Dirichlet eigenpair of the half-ball B^{N-1}_{1,+} = {|y| < 1, y_{N-1} > 0}.
/// N = 2: (0, 1), pi^2, sin(pi y). N = 3: half-disc, j_{1,1}^2, J1(j_{1,1} r) sin(theta) / max.
EigenPair eigenpair_halfball(int N);

void to_json(nlohmann::json& j, const IntegrabilityResult& r);

}  // namespace dinilab
