#include "dinilab/oracles.hpp"

#include <cmath>
#include <string>

#include "dinilab/errors.hpp"
#include "dinilab/quadrature.hpp"

namespace dinilab {

namespace {

constexpr double kPi = 3.14159265358979323846;

// |S^k|, surface area of the unit k-sphere in R^{k+1}
double sphere_area(int k) { return 2.0 * std::pow(kPi, 0.5 * (k + 1)) / std::tgamma(0.5 * (k + 1)); }

double bisect(const std::function<double(double)>& f, double lo, double hi) {
  double flo = f(lo);
  for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

struct BesselConstants {
  double j11;     // first positive zero of J1
  double jp11;    // first positive zero of J1'
  double j1_max;  // J1(jp11)
};

const BesselConstants& bessel_constants() {
  static const BesselConstants c = [] {
    BesselConstants b{};
    b.j11 = bisect([](double x) { return std::cyl_bessel_j(1.0, x); }, 3.0, 4.5);
    // J1'(x) = J0(x) - J1(x)/x
    b.jp11 = bisect([](double x) { return std::cyl_bessel_j(0.0, x) - std::cyl_bessel_j(1.0, x) / x; }, 1.5, 2.2);
    b.j1_max = std::cyl_bessel_j(1.0, b.jp11);
    return b;
  }();
  return c;
}

}  // namespace

double poisson_constant(int N) {
  if (N < 1) throw ArgumentError("poisson_constant: N must be >= 1");
  return std::pow(kPi, -0.5 * N) * std::tgamma(0.5 * N);
}

double poisson_kernel(const KernelPoint& pt) {
  const auto N = static_cast<std::size_t>(pt.N);
  if (pt.N < 2 || pt.x.size() != N || pt.z.size() != N) throw ArgumentError("poisson_kernel: dimension mismatch");
  if (!(pt.x[N - 1] > 0.0)) throw DomainError("poisson_kernel: x must satisfy x_N > 0");
  if (pt.z[N - 1] != 0.0) throw DomainError("poisson_kernel: z must lie on x_N = 0");
  double r2 = 0.0;
  for (std::size_t i = 0; i < N; ++i) r2 += (pt.x[i] - pt.z[i]) * (pt.x[i] - pt.z[i]);
  return poisson_constant(pt.N) * pt.x[N - 1] * std::pow(r2, -0.5 * pt.N);
}

double kernel_normalization(int N, double x_N, double R) {
  if (N < 2) throw ArgumentError("kernel_normalization: N must be >= 2");
  if (!(x_N > 0.0)) throw DomainError("kernel_normalization: x_N must be > 0");
  if (!(R > 0.0)) return 0.0;
  // radial reduction over the (N-1)-dimensional boundary: |S^{N-2}| rho^{N-2} drho
  const double c = poisson_constant(N) * sphere_area(N - 2);
  auto f = [&](double rho) { return c * x_N * std::pow(rho, N - 2) * std::pow(rho * rho + x_N * x_N, -0.5 * N); };
  QuadratureOptions q;
  q.rel_tol = 1e-13;
  // split at geometric breakpoints so far-field panels stay resolved
  double total = 0.0, lo = 0.0, hi = std::min(R, x_N);
  while (true) {
    total += integrate(f, lo, hi, q).value;
    if (hi >= R) break;
    lo = hi;
    hi = std::min(R, 4.0 * hi);
  }
  return total;
}

IntegrabilityResult mv_integrability(int N, double p, const AbsorptionPotential& pot, double R,
                                     std::span<const double> a, const IntegrabilityOptions& opts) {
  if (N != 2 && N != 3) throw ArgumentError("mv_integrability: N must be 2 or 3");
  if (!(p > 1.0)) throw ArgumentError("mv_integrability: p must be > 1");
  if (!(R > 0.0)) throw ArgumentError("mv_integrability: R must be > 0");
  if (a.size() != static_cast<std::size_t>(N)) throw ArgumentError("mv_integrability: a has wrong dimension");
  if (a[static_cast<std::size_t>(N - 1)] != 0.0) throw DomainError("mv_integrability: a must lie on x_N = 0");
  if (pot.is_degenerate() && pot.distance(a) != 0.0)
    throw DomainError("mv_integrability: a must lie on the degeneracy set");

  const double cN = poisson_constant(N);
  const bool axisymmetric = pot.geometry != PotentialGeometry::line_distance || N == 2;
  QuadratureOptions inner;
  inner.rel_tol = 1e-10;
  inner.abs_tol = 0.0;
  std::vector<double> x(static_cast<std::size_t>(N));

  // angular part at radius r: int over the upper unit half-sphere of H (cN th_N)^p th_N dsigma,
  // the radial factor r^{N - p(N-1)} is applied by the caller.
  auto angular = [&](double r) -> double {
    if (N == 2) {
      auto g = [&](double th) {
        const double s = std::sin(th);
        x[0] = a[0] + r * std::cos(th);
        x[1] = r * s;
        return pot.at(x) * std::pow(cN * s, p) * s;
      };
      return integrate(g, 0.0, kPi, inner).value;
    }
    if (axisymmetric) {
      auto g = [&](double ph) {
        const double c = std::cos(ph);
        x[0] = a[0] + r * std::sin(ph);
        x[1] = a[1];
        x[2] = r * c;
        return pot.at(x) * std::pow(cN * c, p) * c * std::sin(ph);
      };
      return 2.0 * kPi * integrate(g, 0.0, 0.5 * kPi, inner).value;
    }
    auto g = [&](double ph) {
      const double c = std::cos(ph), s = std::sin(ph);
      auto gg = [&](double ps) {
        x[0] = a[0] + r * s * std::cos(ps);
        x[1] = a[1] + r * s * std::sin(ps);
        x[2] = r * c;
        return pot.at(x);
      };
      return integrate(gg, 0.0, 2.0 * kPi, inner).value * std::pow(cN * c, p) * c * s;
    };
    return integrate(g, 0.0, 0.5 * kPi, inner).value;
  };

  const double radial_exp = N - p * (N - 1);
  QuadratureOptions outer;
  outer.rel_tol = 1e-9;

  IntegrabilityResult res;
  double quad_err = 0.0;
  for (int k = 0; k < opts.max_shells; ++k) {
    const double r1 = std::ldexp(R, -k), r0 = std::ldexp(R, -k - 1);
    const auto q = integrate([&](double r) { return angular(r) * std::pow(r, radial_exp); }, r0, r1, outer);
    res.shells.push_back(q.value);
    quad_err += q.error;
    res.shells_used = k + 1;
    const auto st = assess_shells(res.shells, opts.policy, opts.rel_tol);
    res.fitted_ratio = st.fitted_ratio;
    if (st.state == ShellState::diverges) {
      res.finite = false;
      return res;
    }
    if (st.state == ShellState::converges) {
      double sum = 0.0;
      for (double v : res.shells) sum += v;
      res.finite = true;
      res.value = sum + st.tail_estimate;
      res.error = st.tail_estimate + quad_err;
      return res;
    }
  }
  throw IndeterminateError("mv_integrability: no verdict within " + std::to_string(opts.max_shells) + " shells",
                           opts.max_shells);
}

double p_critical(int N) {
  if (N < 2) throw ArgumentError("p_critical: N must be >= 2");
  return 1.0 + 2.0 / (N - 1);
}

double exact_1d_blowup(double p, double h_const, double x) {
  if (!(p > 1.0)) throw ArgumentError("exact_1d_blowup: p must be > 1");
  if (!(h_const > 0.0)) throw ArgumentError("exact_1d_blowup: h must be > 0");
  if (!(x > 0.0)) throw DomainError("exact_1d_blowup: x must be > 0");
  const double m = 2.0 / (p - 1.0);
  const double A = std::pow(m * (m + 1.0) / h_const, 1.0 / (p - 1.0));
  return A * std::pow(x, -m);
}

EigenPair eigenpair_halfball(int N) {
  EigenPair e;
  e.N = N;
  if (N == 2) {
    e.lambda1 = kPi * kPi;
    e.y_tilde = {0.5};
    e.psi1 = [](std::span<const double> y) {
      if (y.size() != 1) throw ArgumentError("psi1: expected a 1-D point");
      if (y[0] <= 0.0 || y[0] >= 1.0) return 0.0;
      return std::sin(kPi * y[0]);
    };
    return e;
  }
  if (N == 3) {
    const auto& b = bessel_constants();
    e.lambda1 = b.j11 * b.j11;
    e.y_tilde = {0.0, b.jp11 / b.j11};
    e.psi1 = [b](std::span<const double> y) {
      if (y.size() != 2) throw ArgumentError("psi1: expected a 2-D point");
      const double r = std::hypot(y[0], y[1]);
      if (y[1] <= 0.0 || r >= 1.0) return 0.0;
      // J1(j r) sin(theta) = J1(j r) y_2 / r; J1(z)/z -> 1/2 as z -> 0
      const double z = b.j11 * r;
      const double j1_over_r = z > 1e-8 ? std::cyl_bessel_j(1.0, z) / r : 0.5 * b.j11;
      return j1_over_r * y[1] / b.j1_max;
    };
    return e;
  }
  throw ArgumentError("eigenpair_halfball: N must be 2 or 3");
}

void to_json(nlohmann::json& j, const IntegrabilityResult& r) {
  j = {{"verdict", r.finite ? "finite" : "infinite"},
       {"shells_used", r.shells_used},
       {"fitted_ratio", r.fitted_ratio},
       {"shells", r.shells}};
  if (r.finite) {
    j["value"] = r.value;
    j["error_bound"] = r.error;
  }
}

}  // namespace dinilab
