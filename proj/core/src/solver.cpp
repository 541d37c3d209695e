#include "dinilab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "dinilab/errors.hpp"
#include "dinilab/parallel.hpp"

namespace dinilab {

namespace {

inline double pow_p(double u, double p) {
  if (p == 2.0) return u * u;
  if (p == 3.0) return u * u * u;
  return std::pow(u, p);
}

inline double pow_pm1(double u, double p) {
  if (p == 2.0) return u;
  if (p == 3.0) return u * u;
  return std::pow(u, p - 1.0);
}

// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations.
std::vector<double> sym_eigenvalues(std::vector<double> a, int n) {
  auto at = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i * n + j)]; };
  for (int sweep = 0; sweep < 50; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
    if (off < 1e-30) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (at(p, q) == 0.0) continue;
        const double theta = 0.5 * (at(q, q) - at(p, p)) / at(p, q);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = at(i, i);
  return ev;
}

double smoothstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

void build_identity(DiscreteSystem& sys) {
  const auto& g = sys.grid;
  const auto st = g.strides();
  auto& A = sys.A;
  A.uniform = true;
  double diag = 0.0;
  for (int d = 0; d < g.dim(); ++d) {
    const double w = 1.0 / (g.spacing[static_cast<std::size_t>(d)] * g.spacing[static_cast<std::size_t>(d)]);
    A.offsets.push_back(-st[static_cast<std::size_t>(d)]);
    A.coef.push_back(-w);
    A.offsets.push_back(st[static_cast<std::size_t>(d)]);
    A.coef.push_back(-w);
    diag += 2.0 * w;
  }
  A.diag = {diag};
}

void build_symmetric(DiscreteSystem& sys) {
  const auto& g = sys.grid;
  const int N = g.dim();
  const auto NN = static_cast<std::size_t>(N);
  const auto st = g.strides();
  const std::size_t n = g.size();

  // neighbor slots: axial and face (anti)diagonal offsets
  std::map<std::vector<int>, std::size_t> slot;
  std::vector<std::vector<int>> dirs;
  auto add_dir = [&](std::vector<int> v) {
    if (!slot.count(v)) {
      slot[v] = dirs.size();
      dirs.push_back(v);
    }
  };
  for (int d = 0; d < N; ++d)
    for (int sgn : {-1, 1}) {
      std::vector<int> v(NN, 0);
      v[static_cast<std::size_t>(d)] = sgn;
      add_dir(v);
    }
  for (int d = 0; d < N; ++d)
    for (int e = d + 1; e < N; ++e)
      for (int sd : {-1, 1})
        for (int se : {-1, 1}) {
          std::vector<int> v(NN, 0);
          v[static_cast<std::size_t>(d)] = sd;
          v[static_cast<std::size_t>(e)] = se;
          add_dir(v);
        }
  const std::size_t m = dirs.size();
  std::vector<double> w(n * m, 0.0);

  std::vector<int> cshape(NN);
  std::size_t ncells = 1;
  double V = 1.0;
  for (std::size_t d = 0; d < NN; ++d) {
    cshape[d] = g.shape[d] - 1;
    ncells *= static_cast<std::size_t>(cshape[d]);
    V *= g.spacing[d];
  }

  std::vector<int> c(NN), ci(NN), cj(NN);
  std::vector<double> xc(NN), a(NN * NN);
  double d0 = std::numeric_limits<double>::infinity(), d1 = 0.0;

  auto add_edge = [&](const std::vector<int>& from, const std::vector<int>& to, double weight) {
    std::vector<int> v(NN);
    for (std::size_t d = 0; d < NN; ++d) v[d] = to[d] - from[d];
    std::vector<int> mv(NN);
    for (std::size_t d = 0; d < NN; ++d) mv[d] = -v[d];
    const std::size_t i = g.ravel(from), j = g.ravel(to);
    w[i * m + slot.at(v)] += weight;
    w[j * m + slot.at(mv)] += weight;
  };

  for (std::size_t cell = 0; cell < ncells; ++cell) {
    std::size_t rem = cell;
    for (int d = N - 1; d >= 0; --d) {
      const auto dd = static_cast<std::size_t>(d);
      c[dd] = static_cast<int>(rem % static_cast<std::size_t>(cshape[dd]));
      rem /= static_cast<std::size_t>(cshape[dd]);
      xc[dd] = g.origin[dd] + (c[dd] + 0.5) * g.spacing[dd];
    }
    std::fill(a.begin(), a.end(), 0.0);
    sys.spec.coefficients.sampler(xc, a);
    for (std::size_t i = 0; i < NN; ++i)
      for (std::size_t j = i + 1; j < NN; ++j)
        if (std::abs(a[i * NN + j] - a[j * NN + i]) > 1e-12 * (std::abs(a[i * NN + j]) + 1.0))
          throw ArgumentError("coefficients: a_ij is not symmetric");
    const auto ev = sym_eigenvalues(a, N);
    d0 = std::min(d0, *std::min_element(ev.begin(), ev.end()));
    d1 = std::max(d1, *std::max_element(ev.begin(), ev.end()));

    for (int d = 0; d < N; ++d) {
      const auto dd = static_cast<std::size_t>(d);
      // axial edges along d
      const double wax = a[dd * NN + dd] * V / (std::ldexp(1.0, N - 1) * g.spacing[dd] * g.spacing[dd]);
      for (unsigned bits = 0; bits < (1u << N); ++bits) {
        if ((bits >> d) & 1u) continue;
        for (std::size_t k = 0; k < NN; ++k) ci[k] = c[k] + static_cast<int>((bits >> k) & 1u);
        cj = ci;
        cj[dd] += 1;
        add_edge(ci, cj, wax);
      }
      for (int e = d + 1; e < N; ++e) {
        const auto ee = static_cast<std::size_t>(e);
        const double ade = a[dd * NN + ee];
        if (ade == 0.0) continue;
        const double hh = g.spacing[dd] * g.spacing[ee];
        const double wdiag = std::abs(ade) * V / (std::ldexp(1.0, N - 2) * hh);
        const double wsub = std::abs(ade) * V / (std::ldexp(1.0, N - 1) * hh);
        for (unsigned bits = 0; bits < (1u << N); ++bits) {
          if ((bits >> d) & 1u || (bits >> e) & 1u) continue;
          for (std::size_t k = 0; k < NN; ++k) ci[k] = c[k] + static_cast<int>((bits >> k) & 1u);
          cj = ci;
          if (ade > 0) {
            cj[dd] += 1;
            cj[ee] += 1;
          } else {
            ci[dd] += 1;
            cj[ee] += 1;
          }
          add_edge(ci, cj, wdiag);
        }
        for (int axis : {d, e}) {
          const auto ax = static_cast<std::size_t>(axis);
          for (unsigned bits = 0; bits < (1u << N); ++bits) {
            if ((bits >> axis) & 1u) continue;
            for (std::size_t k = 0; k < NN; ++k) ci[k] = c[k] + static_cast<int>((bits >> k) & 1u);
            cj = ci;
            cj[ax] += 1;
            add_edge(ci, cj, -wsub);
          }
        }
      }
    }
  }
  if (!(d0 > 0.0)) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "coefficients: ellipticity fails (smallest eigenvalue %.6g)", d0);
    throw ArgumentError(buf);
  }
  sys.d0 = d0;
  sys.d1 = d1;

  auto& A = sys.A;
  A.uniform = false;
  for (const auto& v : dirs) {
    std::ptrdiff_t off = 0;
    for (std::size_t d = 0; d < NN; ++d) off += v[d] * st[d];
    A.offsets.push_back(off);
  }
  A.coef.assign(n * m, 0.0);
  A.diag.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (A.fixed[i]) continue;
    double s = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const double wk = w[i * m + k];
      if (wk < -1e-12 * V) throw ArgumentError("coefficients: negative edge weight, stencil is not an M-matrix "
                                                "(off-diagonal a_ij too large for the grid aspect ratio)");
      A.coef[i * m + k] = -wk / V;
      s += wk;
    }
    A.diag[i] = s / V;
  }
}

void build_pattern(DiscreteSystem& sys) {
  const auto& g = sys.grid;
  const auto& bc = sys.spec.bc;
  const int N = g.dim();
  const auto NN = static_cast<std::size_t>(N);
  const std::size_t n = g.size();
  sys.pattern.assign(n, 0.0);
  std::vector<int> ijk(NN);
  std::vector<double> x(NN);
  auto on_face = [&](std::size_t i) {
    g.unravel(i, ijk);
    return ijk[NN - 1] == 0;
  };

  switch (bc.kind) {
    case BoundaryData::Kind::constant:
      for (std::size_t i = 0; i < n; ++i)
        if (sys.A.fixed[i] && (!bc.zero_elsewhere || on_face(i))) sys.pattern[i] = 1.0;
      break;
    case BoundaryData::Kind::profile:
      if (!bc.profile) throw ArgumentError("boundary: profile kind without a profile function");
      for (std::size_t i = 0; i < n; ++i)
        if (sys.A.fixed[i] && (!bc.zero_elsewhere || on_face(i))) {
          g.coords(i, x);
          sys.pattern[i] = bc.profile(x);
        }
      break;
    case BoundaryData::Kind::mollified_dirac: {
      if (N < 2) throw ArgumentError("boundary: mollified Dirac needs N >= 2");
      if (bc.center.size() != NN - 1) throw ArgumentError("boundary: Dirac center needs N-1 coordinates");
      if (!(bc.width_cells > 0.0)) throw ArgumentError("boundary: Dirac width must be positive");
      double mass = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!on_face(i)) continue;
        g.coords(i, x);
        double hat = 1.0, tw = 1.0;
        for (std::size_t d = 0; d + 1 < NN; ++d) {
          const double hw = bc.width_cells * g.spacing[d];
          hat *= std::max(0.0, 1.0 - std::abs(x[d] - bc.center[d]) / hw);
          const bool end = ijk[d] == 0 || ijk[d] == g.shape[d] - 1;
          tw *= end ? 0.5 * g.spacing[d] : g.spacing[d];
        }
        sys.pattern[i] = hat;
        mass += tw * hat;
      }
      if (!(mass > 0.0)) throw ArgumentError("boundary: Dirac center is not on the face");
      for (double& v : sys.pattern) v /= mass;
      break;
    }
    case BoundaryData::Kind::patch_constant: {
      if (bc.patches.empty()) throw ArgumentError("boundary: patch_constant needs at least one patch");
      if (!(bc.ramp > 0.0)) throw ArgumentError("boundary: ramp width must be positive");
      for (const auto& P : bc.patches) {
        if (P.center.size() != NN - 1) throw ArgumentError("boundary: patch center needs N-1 coordinates");
        if (!(P.radius >= 0.0) || !(P.weight >= 0.0)) throw ArgumentError("boundary: bad patch radius/weight");
      }
      if (sys.spec.potential.omega && bc.ramp >= 0.5 * sys.spec.potential.omega->s_max())
        sys.warnings.push_back("patch ramp width delta >= rho0/2");
      for (std::size_t i = 0; i < n; ++i) {
        if (!on_face(i)) continue;
        g.coords(i, x);
        double v = 0.0;
        for (const auto& P : bc.patches) {
          double r2 = 0.0;
          for (std::size_t d = 0; d + 1 < NN; ++d) r2 += (x[d] - P.center[d]) * (x[d] - P.center[d]);
          const double dist = std::max(0.0, std::sqrt(r2) - P.radius);
          v = std::max(v, P.weight * (1.0 - smoothstep(dist / bc.ramp)));
        }
        sys.pattern[i] = v;
      }
      break;
    }
  }
  for (double v : sys.pattern)
    if (!(v >= 0.0) || !std::isfinite(v)) throw ArgumentError("boundary: pattern must be finite and nonnegative");
}

}  // namespace

CoefficientField CoefficientField::identity() { return {}; }

CoefficientField CoefficientField::constant(std::vector<double> a) {
  CoefficientField c;
  c.kind = Kind::symmetric;
  c.matrix = a;
  c.sampler = [a](std::span<const double>, std::span<double> out) { std::copy(a.begin(), a.end(), out.begin()); };
  return c;
}

CoefficientField CoefficientField::field(std::function<void(std::span<const double>, std::span<double>)> sampler) {
  CoefficientField c;
  c.kind = Kind::symmetric;
  c.sampler = std::move(sampler);
  return c;
}

BoundaryData BoundaryData::constant_level(double K, bool zero_elsewhere) {
  BoundaryData b;
  b.kind = Kind::constant;
  b.level = K;
  b.zero_elsewhere = zero_elsewhere;
  return b;
}

BoundaryData BoundaryData::dirac(std::vector<double> center, double mass, double width_cells) {
  BoundaryData b;
  b.kind = Kind::mollified_dirac;
  b.center = std::move(center);
  b.level = mass;
  b.width_cells = width_cells;
  b.zero_elsewhere = true;
  return b;
}

BoundaryData BoundaryData::patch_levels(std::vector<Patch> patches, double ramp, double K) {
  BoundaryData b;
  b.kind = Kind::patch_constant;
  b.patches = std::move(patches);
  b.ramp = ramp;
  b.level = K;
  b.zero_elsewhere = true;
  return b;
}

BoundaryData BoundaryData::profile_data(std::function<double(std::span<const double>)> f, double K) {
  BoundaryData b;
  b.kind = Kind::profile;
  b.profile = std::move(f);
  b.level = K;
  return b;
}

GridField DiscreteSystem::boundary_field(double K) const {
  GridField f = grid;
  for (std::size_t i = 0; i < f.size(); ++i) f.values[i] = A.fixed[i] ? K * pattern[i] : 0.0;
  return f;
}

DiscreteSystem discretize(const ProblemSpec& spec, const std::vector<int>& resolution, std::size_t max_nodes_3d) {
  if (spec.N < 1 || spec.N > 3) throw ArgumentError("discretize: N must be 1, 2 or 3");
  if (!(spec.p > 1.0)) throw ArgumentError("discretize: p must be > 1");
  if (spec.box.dim() != spec.N) throw ArgumentError("discretize: box dimension differs from N");
  if (resolution.size() != static_cast<std::size_t>(spec.N)) throw ArgumentError("discretize: resolution needs N entries");
  for (int r : resolution)
    if (r < 8) throw ArgumentError("discretize: resolution must be >= 8 nodes per axis");
  if (!(spec.bc.level >= 0.0)) throw ArgumentError("discretize: boundary level must be >= 0");

  DiscreteSystem sys;
  sys.spec = spec;
  sys.level = spec.bc.level;
  sys.grid = GridField::on_box(spec.box, resolution);
  if (spec.N == 3 && sys.grid.size() > max_nodes_3d) throw ArgumentError("discretize: 3-D grid exceeds the node limit");
  const std::size_t n = sys.grid.size();
  sys.A.n = n;
  sys.A.fixed.resize(n);
  for (std::size_t i = 0; i < n; ++i) sys.A.fixed[i] = sys.grid.on_boundary(i) ? 1 : 0;

  if (spec.coefficients.kind == CoefficientField::Kind::identity) {
    build_identity(sys);
  } else {
    if (!spec.coefficients.sampler) throw ArgumentError("discretize: symmetric coefficients without sampler");
    build_symmetric(sys);
  }

  sys.H.assign(n, 0.0);
  std::vector<double> x(static_cast<std::size_t>(spec.N));
  for (std::size_t i = 0; i < n; ++i) {
    if (sys.A.fixed[i]) continue;
    sys.grid.coords(i, x);
    sys.H[i] = spec.potential.at(x);
  }
  build_pattern(sys);
  return sys;
}

GridField harmonic_solve(const DiscreteSystem& sys, double K, const LinearOptions& opts) {
  GridField u = sys.boundary_field(K);
  if (K == 0.0) return u;
  // A_II u_I = -A_IB g: residual of the boundary-only field gives the right-hand side
  std::vector<double> Ag;
  sys.A.apply_full(u.values, Ag);
  std::vector<double> b(u.size()), x(u.size(), 0.0);
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = sys.A.fixed[i] ? 0.0 : -Ag[i];
  const auto r = pcg(sys.A, nullptr, b, x, opts.cg_tol, opts.max_cg_iter);
  if (!r.converged) throw NonConvergenceError("harmonic_solve: conjugate gradient did not converge", r.rel_residual);
  for (std::size_t i = 0; i < u.size(); ++i)
    if (!sys.A.fixed[i]) u.values[i] = x[i];
  return u;
}

GridField harmonic_majorant(const ProblemSpec& spec, const std::vector<int>& resolution) {
  const auto sys = discretize(spec, resolution);
  return harmonic_solve(sys, spec.bc.level);
}

std::vector<double> residual(const DiscreteSystem& sys, const std::vector<double>& u) {
  std::vector<double> F;
  sys.A.apply_full(u, F);
  const double p = sys.spec.p;
  for (std::size_t i = 0; i < F.size(); ++i)
    if (!sys.A.fixed[i] && sys.H[i] != 0.0) F[i] += sys.H[i] * pow_p(u[i], p);
  return F;
}

namespace {

ResidualNorms norms_from(const DiscreteSystem& sys, const std::vector<double>& u, const std::vector<double>& F,
                         std::vector<double>& scratch) {
  sys.A.apply_abs(u, scratch);
  const double p = sys.spec.p;
  ResidualNorms r;
  // per node: a global scale lets O(1) far-field nodes pass while the peak is huge
  double s = 0.0, f = 0.0, q = 0.0;
  for (std::size_t i = 0; i < F.size(); ++i) {
    if (sys.A.fixed[i]) continue;
    const double si = std::max(1.0, scratch[i] + sys.H[i] * pow_p(std::abs(u[i]), p));
    s = std::max(s, si);
    f = std::max(f, std::abs(F[i]));
    q = std::max(q, std::abs(F[i]) / si);
  }
  r.absolute = f;
  r.scale = s;
  r.scaled = q;
  return r;
}

}  // namespace

ResidualNorms residual_norms(const DiscreteSystem& sys, const std::vector<double>& u) {
  std::vector<double> scratch;
  const auto F = residual(sys, u);
  return norms_from(sys, u, F, scratch);
}

SolveReport newton_solve(const DiscreteSystem& sys, const GridField& init, const NewtonOptions& opts) {
  if (!init.same_grid(sys.grid)) throw ArgumentError("newton_solve: init is on a different grid");
  const std::size_t n = sys.grid.size();
  const double p = sys.spec.p;
  SolveReport rep;
  rep.level = sys.level;
  rep.field = init;
  auto& u = rep.field.values;
  for (std::size_t i = 0; i < n; ++i) {
    if (sys.A.fixed[i]) u[i] = sys.level * sys.pattern[i];
    else if (!(u[i] >= 0.0)) u[i] = 0.0;
  }

  std::vector<double> scratch, extra(n, 0.0), b(n, 0.0), delta(n, 0.0), cand(n);
  auto F = residual(sys, u);
  auto nr = norms_from(sys, u, F, scratch);

  for (int it = 1;; ++it) {
    rep.newton_iterations = it;
    rep.final_residual = nr.scaled;
    rep.residual_abs = nr.absolute;
    if (nr.scaled <= opts.tol) return rep;
    if (it >= opts.max_iter)
      throw NonConvergenceError("newton_solve: no convergence in " + std::to_string(opts.max_iter) + " iterations",
                                nr.scaled);

    for (std::size_t i = 0; i < n; ++i) {
      extra[i] = sys.A.fixed[i] || sys.H[i] == 0.0 ? 0.0 : p * sys.H[i] * pow_pm1(u[i], p);
      b[i] = sys.A.fixed[i] ? 0.0 : -F[i];
      delta[i] = 0.0;
    }
    const auto cg = pcg(sys.A, &extra, b, delta, opts.cg_tol);
    rep.cg_iterations += cg.iterations;
    if (!cg.converged && !(cg.rel_residual < 1e-6))
      throw NonConvergenceError("newton_solve: inner conjugate gradient failed", nr.scaled);

    // halve until the residual decreases; from a supersolution every partial step stays one
    double lambda = 1.0;
    bool accepted = false;
    std::vector<double> Fc;
    ResidualNorms nc;
    for (int h = 0; h <= opts.max_halvings; ++h, lambda *= 0.5) {
      for (std::size_t i = 0; i < n; ++i) cand[i] = sys.A.fixed[i] ? u[i] : std::max(0.0, u[i] + lambda * delta[i]);
      Fc = residual(sys, cand);
      nc = norms_from(sys, cand, Fc, scratch);
      if (nc.scaled < nr.scaled) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      for (std::size_t i = 0; i < n; ++i) cand[i] = sys.A.fixed[i] ? u[i] : std::max(0.0, u[i] + delta[i]);
      Fc = residual(sys, cand);
      nc = norms_from(sys, cand, Fc, scratch);
    }
    for (std::size_t i = 0; i < n; ++i)
      if (cand[i] > u[i] + 1e-12 * std::max(1.0, std::abs(u[i]))) {
        rep.monotone_flag = false;
        break;
      }
    u.swap(cand);
    F.swap(Fc);
    nr = nc;
  }
}

std::size_t comparison_violations(const GridField& lower, const GridField& upper, double tol) {
  if (!lower.same_grid(upper)) throw ArgumentError("comparison_violations: fields on different grids");
  std::size_t c = 0;
  for (std::size_t i = 0; i < lower.size(); ++i)
    if (upper.values[i] - lower.values[i] < -tol * std::max(1.0, std::abs(lower.values[i]))) ++c;
  return c;
}

std::vector<SolveReport> solve_sequence(const DiscreteSystem& sys0, const std::vector<double>& K_list,
                                        const NewtonOptions& opts,
                                        const std::function<void(const SolveReport&)>& on_level) {
  for (std::size_t j = 0; j < K_list.size(); ++j) {
    if (!(K_list[j] >= 0.0)) throw ArgumentError("solve_sequence: levels must be >= 0");
    if (j > 0 && !(K_list[j] > K_list[j - 1])) throw ArgumentError("solve_sequence: K_list must be strictly increasing");
  }
  std::vector<SolveReport> out;
  if (K_list.empty()) return out;
  DiscreteSystem sys = sys0;
  const GridField unit = harmonic_solve(sys, 1.0);
  GridField start = unit;
  for (std::size_t j = 0; j < K_list.size(); ++j) {
    const double K = K_list[j];
    const double dK = j == 0 ? K : K - K_list[j - 1];
    if (j == 0) {
      for (auto& v : start.values) v *= K;
    } else {
      start = out.back().field;
      for (std::size_t i = 0; i < start.size(); ++i) start.values[i] += dK * unit.values[i];
    }
    sys.level = K;
    out.push_back(newton_solve(sys, start, opts));
    if (j > 0) {
      const auto v = comparison_violations(out[j - 1].field, out[j].field, 1e-10);
      if (v != 0)
        throw InvariantError("solve_sequence: comparison principle violated at " + std::to_string(v) +
                             " nodes between levels " + std::to_string(j - 1) + " and " + std::to_string(j));
    }
    if (on_level) on_level(out.back());
  }
  return out;
}

std::vector<SolveReport> solve_sequence(const ProblemSpec& spec, const std::vector<double>& K_list,
                                        const std::vector<int>& resolution, const NewtonOptions& opts) {
  return solve_sequence(discretize(spec, resolution), K_list, opts);
}

CoefficientField coefficients_from_json(const nlohmann::json& j, int N) {
  const std::string kind = j.value("kind", std::string("identity"));
  if (kind == "identity") return CoefficientField::identity();
  if (kind == "symmetric") {
    if (!j.contains("a")) throw ConfigError("coefficients: symmetric kind needs \"a\"");
    std::vector<double> a;
    for (const auto& row : j.at("a"))
      for (const auto& v : row) a.push_back(v.get<double>());
    if (a.size() != static_cast<std::size_t>(N * N)) throw ConfigError("coefficients: \"a\" must be N x N");
    return CoefficientField::constant(a);
  }
  throw ConfigError("coefficients: unknown kind \"" + kind + "\"");
}

BoundaryData boundary_from_json(const nlohmann::json& j) {
  const std::string kind = j.value("kind", std::string("constant"));
  BoundaryData b;
  if (kind == "constant") {
    b = BoundaryData::constant_level(j.value("level", 1.0), j.value("zero_elsewhere", false));
  } else if (kind == "mollified_dirac") {
    if (!j.contains("center")) throw ConfigError("boundary: mollified_dirac needs \"center\"");
    b = BoundaryData::dirac(j.at("center").get<std::vector<double>>(), j.value("level", 1.0), j.value("width_cells", 2.0));
  } else if (kind == "patch_constant") {
    std::vector<Patch> ps;
    for (const auto& pj : j.at("patches")) {
      Patch P;
      P.center = pj.at("center").get<std::vector<double>>();
      P.radius = pj.value("radius", 0.0);
      P.weight = pj.value("weight", 1.0);
      ps.push_back(P);
    }
    b = BoundaryData::patch_levels(ps, j.value("ramp", 0.1), j.value("level", 1.0));
  } else {
    throw ConfigError("boundary: unknown kind \"" + kind + "\" (profile data is API-only)");
  }
  if (!(b.level >= 0.0)) throw ConfigError("boundary: level must be >= 0");
  return b;
}

ProblemSpec problem_from_json(const nlohmann::json& j) {
  ProblemSpec s;
  s.N = j.value("N", 2);
  if (s.N < 1 || s.N > 3) throw ConfigError("problem: N must be 1, 2 or 3");
  s.p = j.value("p", 2.0);
  if (!(s.p > 1.0)) throw ConfigError("problem: p must be > 1");
  if (!j.contains("box")) throw ConfigError("problem: missing \"box\"");
  s.box.lo = j.at("box").at("lo").get<std::vector<double>>();
  s.box.hi = j.at("box").at("hi").get<std::vector<double>>();
  try {
    s.box.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("problem: ") + e.what());
  }
  if (s.box.dim() != s.N) throw ConfigError("problem: box dimension differs from N");
  s.coefficients = coefficients_from_json(j.value("coefficients", nlohmann::json::object()), s.N);
  s.potential = j.contains("potential") ? potential_from_json(j.at("potential")) : AbsorptionPotential::constant(0.0);
  s.bc = boundary_from_json(j.value("boundary", nlohmann::json::object()));
  return s;
}

void to_json(nlohmann::json& j, const ProblemSpec& s) {
  j = {{"N", s.N}, {"p", s.p}, {"box", {{"lo", s.box.lo}, {"hi", s.box.hi}}}, {"potential", s.potential}};
  if (s.coefficients.kind == CoefficientField::Kind::identity) {
    j["coefficients"] = {{"kind", "identity"}};
  } else {
    j["coefficients"] = {{"kind", "symmetric"}, {"a_row_major", s.coefficients.matrix}};
  }
  nlohmann::json b = {{"level", s.bc.level}, {"zero_elsewhere", s.bc.zero_elsewhere}};
  switch (s.bc.kind) {
    case BoundaryData::Kind::constant: b["kind"] = "constant"; break;
    case BoundaryData::Kind::mollified_dirac:
      b["kind"] = "mollified_dirac";
      b["center"] = s.bc.center;
      b["width_cells"] = s.bc.width_cells;
      break;
    case BoundaryData::Kind::patch_constant: {
      b["kind"] = "patch_constant";
      b["ramp"] = s.bc.ramp;
      nlohmann::json ps = nlohmann::json::array();
      for (const auto& P : s.bc.patches) ps.push_back({{"center", P.center}, {"radius", P.radius}, {"weight", P.weight}});
      b["patches"] = ps;
      break;
    }
    case BoundaryData::Kind::profile: b["kind"] = "profile"; break;
  }
  j["boundary"] = b;
}

}  // namespace dinilab
