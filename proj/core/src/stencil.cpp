#include "dinilab/stencil.hpp"

#include <algorithm>
#include <cmath>

#include "dinilab/parallel.hpp"

namespace dinilab {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return parallel_sum(a.size(), [&](std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += a[i] * b[i];
    return s;
  });
}

}  // namespace

void StencilOperator::apply_full(const std::vector<double>& u, std::vector<double>& y) const {
  y.resize(n);
  const std::size_t m = offsets.size();
  parallel_for(n, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      if (fixed[i]) {
        y[i] = 0.0;
        continue;
      }
      double s = diag_at(i) * u[i];
      for (std::size_t k = 0; k < m; ++k)
        s += coef_at(i, k) * u[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + offsets[k])];
      y[i] = s;
    }
  });
}

void StencilOperator::apply_abs(const std::vector<double>& u, std::vector<double>& y) const {
  y.resize(n);
  const std::size_t m = offsets.size();
  parallel_for(n, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      if (fixed[i]) {
        y[i] = 0.0;
        continue;
      }
      double s = std::abs(diag_at(i) * u[i]);
      for (std::size_t k = 0; k < m; ++k)
        s += std::abs(coef_at(i, k) * u[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + offsets[k])]);
      y[i] = s;
    }
  });
}

void StencilOperator::apply_interior(const std::vector<double>& x, const std::vector<double>* extra,
                                     std::vector<double>& y) const {
  y.resize(n);
  const std::size_t m = offsets.size();
  parallel_for(n, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      if (fixed[i]) {
        y[i] = x[i];
        continue;
      }
      double s = (diag_at(i) + (extra ? (*extra)[i] : 0.0)) * x[i];
      for (std::size_t k = 0; k < m; ++k) {
        const auto j = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + offsets[k]);
        if (!fixed[j]) s += coef_at(i, k) * x[j];
      }
      y[i] = s;
    }
  });
}

std::size_t StencilOperator::interior_count() const {
  std::size_t c = 0;
  for (char f : fixed) c += f ? 0 : 1;
  return c;
}

CgResult pcg(const StencilOperator& A, const std::vector<double>* extra, const std::vector<double>& b,
             std::vector<double>& x, double rel_tol, int max_iter) {
  const std::size_t n = A.n;
  if (max_iter <= 0) max_iter = static_cast<int>(std::min<std::size_t>(20 * n + 100, 200000));
  std::vector<double> r(n), z(n), p(n), q(n), dinv(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (!A.fixed[i]) dinv[i] = 1.0 / (A.diag_at(i) + (extra ? (*extra)[i] : 0.0));

  A.apply_interior(x, extra, q);
  for (std::size_t i = 0; i < n; ++i) r[i] = A.fixed[i] ? 0.0 : b[i] - q[i];
  const double bnorm = std::sqrt(dot(b, b));
  CgResult res;
  if (bnorm == 0.0) {
    // only the trivial solution; the operator is nonsingular
    for (std::size_t i = 0; i < n; ++i) x[i] = 0.0;
    res.converged = true;
    return res;
  }
  for (std::size_t i = 0; i < n; ++i) z[i] = dinv[i] * r[i];
  p = z;
  double rz = dot(r, z);
  double rnorm = std::sqrt(dot(r, r));
  for (int it = 0; it < max_iter; ++it) {
    if (rnorm <= rel_tol * bnorm) {
      res.converged = true;
      break;
    }
    A.apply_interior(p, extra, q);
    for (std::size_t i = 0; i < n; ++i)
      if (A.fixed[i]) q[i] = 0.0;
    const double pq = dot(p, q);
    if (!(pq > 0.0)) break;  // lost positive definiteness (should not happen)
    const double alpha = rz / pq;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
      z[i] = dinv[i] * r[i];
    }
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    rnorm = std::sqrt(dot(r, r));
    res.iterations = it + 1;
  }
  if (rnorm <= rel_tol * bnorm) res.converged = true;
  res.rel_residual = rnorm / bnorm;
  return res;
}

}  // namespace dinilab
