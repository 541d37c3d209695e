#pragma once

#include <cstddef>
#include <vector>

namespace dinilab {

/// Sparse constant-offset operator on a tensor grid. Rows of fixed (Dirichlet) nodes
/// are identities; interior rows read neighbors at fixed linear offsets, which always
/// stay inside the grid because interior nodes never touch the box faces.
struct StencilOperator {
  std::size_t n = 0;
  std::vector<std::ptrdiff_t> offsets;
  /// uniform: coef has offsets.size() entries shared by all interior rows and diag one
  /// entry; otherwise coef is n * offsets.size() (row-major) and diag has n entries.
  bool uniform = false;
  std::vector<double> coef;
  std::vector<double> diag;
  std::vector<char> fixed;

  double diag_at(std::size_t i) const { return uniform ? diag[0] : diag[i]; }
  double coef_at(std::size_t i, std::size_t k) const {
    return uniform ? coef[k] : coef[i * offsets.size() + k];
  }

  /// y = A u on interior rows using every neighbor (boundary values included); 0 on fixed rows.
  void apply_full(const std::vector<double>& u, std::vector<double>& y) const;
  /// y = |A| |u| on interior rows; 0 on fixed rows (scale for relative residuals).
  void apply_abs(const std::vector<double>& u, std::vector<double>& y) const;
  /// y = (A_II + diag(extra)) x on interior rows, y = x on fixed rows. extra may be null.
  void apply_interior(const std::vector<double>& x, const std::vector<double>* extra, std::vector<double>& y) const;
  std::size_t interior_count() const;
};

struct CgResult {
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = false;
};

/// Jacobi-preconditioned conjugate gradient for (A_II + diag(extra)) x = b on interior rows.
/// b and x must be zero on fixed rows; x holds the initial guess on entry.
CgResult pcg(const StencilOperator& A, const std::vector<double>* extra, const std::vector<double>& b,
             std::vector<double>& x, double rel_tol = 1e-10, int max_iter = 0);

}  // namespace dinilab
