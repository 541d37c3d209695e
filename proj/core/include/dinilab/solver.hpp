#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dinilab/grid.hpp"
#include "dinilab/potentials.hpp"
#include "dinilab/stencil.hpp"

namespace dinilab {

/// Largest 3-D grid accepted by discretize() unless the limit is raised.
inline constexpr std::size_t kMaxNodes3D = 96u * 96u * 96u;

/// Diffusion coefficients a_ij. identity is the Laplacian; symmetric samples a(x) at cell
/// centers (N*N row-major entries per sample).
struct CoefficientField {
  enum class Kind { identity, symmetric };
  Kind kind = Kind::identity;
  std::function<void(std::span<const double> x, std::span<double> a)> sampler;
  std::vector<double> matrix;  // constant matrix, when built from one (kept for JSON)

  static CoefficientField identity();
  static CoefficientField constant(std::vector<double> a_row_major);
  static CoefficientField field(std::function<void(std::span<const double>, std::span<double>)> sampler);
};

struct Patch {
  std::vector<double> center;  // N-1 tangential coordinates on the face x_N = lo
  double radius = 0.0;
  double weight = 1.0;  // relative level K^(i) / max K^(i)
};

/// Dirichlet data = level * unit pattern.
struct BoundaryData {
  enum class Kind { constant, mollified_dirac, patch_constant, profile };
  Kind kind = Kind::constant;
  double level = 1.0;
  /// constant/profile: data only on the degeneracy face x_N = lo, zero on the other faces.
  /// mollified_dirac and patch_constant always vanish off that face.
  bool zero_elsewhere = false;
  std::vector<double> center;  // mollified_dirac: N-1 tangential coordinates of a
  double width_cells = 2.0;    // mollified_dirac: hat half-width in cells
  std::vector<Patch> patches;  // patch_constant
  double ramp = 0.1;           // patch_constant: width of the C^1 ramp outside the patches
  std::function<double(std::span<const double>)> profile;

  static BoundaryData constant_level(double K, bool zero_elsewhere = false);
  static BoundaryData dirac(std::vector<double> center, double mass, double width_cells = 2.0);
  static BoundaryData patch_levels(std::vector<Patch> patches, double ramp, double K);
  static BoundaryData profile_data(std::function<double(std::span<const double>)> f, double K = 1.0);
};

struct ProblemSpec {
  int N = 2;
  double p = 2.0;
  Box box;
  CoefficientField coefficients;
  AbsorptionPotential potential = AbsorptionPotential::constant(0.0);
  BoundaryData bc;
};

struct DiscreteSystem {
  ProblemSpec spec;
  GridField grid;                // geometry only; values unused
  StencilOperator A;             // -div(a grad) scaled to pointwise form
  std::vector<double> H;         // potential at nodes
  std::vector<double> pattern;   // unit boundary pattern on fixed nodes, 0 inside
  double level = 1.0;            // current boundary level (initially bc.level)
  double d0 = 1.0, d1 = 1.0;     // observed ellipticity bounds
  std::vector<std::string> warnings;

  GridField boundary_field(double K) const;  // K * pattern, zero inside
};

/// Builds the conservative stencil, nodal potential and boundary pattern.
/// resolution = nodes per axis (>= 8). Throws ArgumentError on ellipticity or M-matrix failure.
DiscreteSystem discretize(const ProblemSpec& spec, const std::vector<int>& resolution,
                          std::size_t max_nodes_3d = kMaxNodes3D);

struct LinearOptions {
  double cg_tol = 1e-10;
  int max_cg_iter = 0;  // 0: automatic
};

/// Linear problem with H = 0 and boundary data K * pattern.
GridField harmonic_solve(const DiscreteSystem& sys, double K, const LinearOptions& opts = {});
GridField harmonic_majorant(const ProblemSpec& spec, const std::vector<int>& resolution);

struct ResidualNorms {
  double scaled = 0.0;    // max_i |F_i| / max(1, (|A||u|)_i + H_i u_i^p)
  double absolute = 0.0;  // ||F||_inf
  double scale = 1.0;     // max_i of the per-node denominators
};

/// F = A u + H u^p on interior nodes (0 on fixed nodes).
std::vector<double> residual(const DiscreteSystem& sys, const std::vector<double>& u);
ResidualNorms residual_norms(const DiscreteSystem& sys, const std::vector<double>& u);

struct NewtonOptions {
  double tol = 1e-9;  // on the scaled residual
  int max_iter = 100;
  int max_halvings = 30;
  double cg_tol = 1e-10;
};

struct SolveReport {
  GridField field;
  double level = 0.0;
  int newton_iterations = 0;
  double final_residual = 0.0;  // scaled max-norm residual
  double residual_abs = 0.0;
  bool monotone_flag = true;  // iterates never increased at any node
  int cg_iterations = 0;
};

/// Damped Newton from init (boundary nodes reset to sys.level * pattern, negatives clamped).
/// Throws NonConvergenceError after max_iter iterations.
SolveReport newton_solve(const DiscreteSystem& sys, const GridField& init, const NewtonOptions& opts = {});

/// Number of nodes where upper < lower - tol * max(1, |lower|).
std::size_t comparison_violations(const GridField& lower, const GridField& upper, double tol = 1e-10);

/// Solves for every level in K_list (strictly increasing), warm-starting each from the
/// previous solution plus the harmonic lift of the level increment. Throws InvariantError
/// if the discrete comparison principle fails.
std::vector<SolveReport> solve_sequence(const ProblemSpec& spec, const std::vector<double>& K_list,
                                        const std::vector<int>& resolution, const NewtonOptions& opts = {});
/// Same, on an already discretized system. on_level, when set, sees each report as soon
/// as it is accepted (callers use it to keep partial output if a later level fails).
std::vector<SolveReport> solve_sequence(const DiscreteSystem& sys, const std::vector<double>& K_list,
                                        const NewtonOptions& opts = {},
                                        const std::function<void(const SolveReport&)>& on_level = {});

ProblemSpec problem_from_json(const nlohmann::json& j);
BoundaryData boundary_from_json(const nlohmann::json& j);
CoefficientField coefficients_from_json(const nlohmann::json& j, int N);
void to_json(nlohmann::json& j, const ProblemSpec& spec);

}  // namespace dinilab
