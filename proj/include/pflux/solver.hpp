#pragma once

#include "pflux/carrier.hpp"
#include "pflux/error.hpp"
#include "pflux/fem.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace pflux {

struct LineSearch {
  double shrink = 0.5;
  double min_step = 1.0 / 1024.0;
};

struct SolverConfig {
  double p = 2.0;
  std::optional<double> epsilon;  // defaults to 1/t
  double picard_tol = 1e-2;
  double newton_tol = 1e-10;
  int max_iters = 200;
  LineSearch damping;
  bool include_convection = true;

  double epsilon_for(double t) const { return epsilon ? *epsilon : 1.0 / t; }
  /// Throws ConfigError or UnsupportedExponent.
  void validate() const;
};

/// (epsilon + |D|^{p-2}) D with the Frobenius norm; throws UnsupportedExponent for p < 2.
Eigen::Matrix2d stress(const Eigen::Matrix2d& D, double p, double epsilon);

struct MonotonicityGap {
  double gap;         // <S(x) - S(y), x - y>
  double comparator;  // |x - y|^p
};

/// Gap of the map S(x) = |x|^{p-2} x.
MonotonicityGap monotonicity_gap(const Eigen::Matrix2d& x, const Eigen::Matrix2d& y, double p);

/// Body force; tri is the element containing x.
using Forcing = std::function<Eigen::Vector2d(const Point& x, int tri)>;

enum class Linearization { Picard, Newton };

struct IterationRecord {
  int iter = 0;
  Linearization phase = Linearization::Picard;
  double residual = 0.0;  // relative
  double step = 0.0;
};

/// Solver error carrying the iterate history up to the failure.
class SolveFailure : public Error {
 public:
  SolveFailure(ErrorCode code, const std::string& what, std::vector<IterationRecord> history)
      : Error(code, what), history_(std::move(history)) {}
  const std::vector<IterationRecord>& history() const { return history_; }

 private:
  std::vector<IterationRecord> history_;
};

/// Discrete unknowns are x = [vx (ndof) | vy (ndof) | P (nv)]. Rows of boundary velocity
/// dofs and of the pressure at vertex 0 (pinned during the solve) are identity rows with
/// zero residual; the pressure gauge is fixed afterwards.
class Assembler {
 public:
  Assembler(std::shared_ptr<const P2Space> space, double p, double epsilon, bool convection, Forcing forcing = {});

  const P2Space& space() const { return *space_; }
  int size() const { return 2 * space_->num_dofs() + space_->num_vertices(); }
  double p() const { return p_; }
  double epsilon() const { return eps_; }

  /// OpenMP element kernels, scattered in element order into a fixed pattern.
  void assemble(const Eigen::VectorXd& x, Linearization lin, Eigen::VectorXd* residual,
                Eigen::SparseMatrix<double>* jacobian) const;
  /// Single-threaded triplet assembly used as a reference.
  void assemble_serial(const Eigen::VectorXd& x, Linearization lin, Eigen::VectorXd* residual,
                       Eigen::SparseMatrix<double>* jacobian) const;
  Eigen::VectorXd residual(const Eigen::VectorXd& x) const;

  /// int (eps/2)|D|^2 + (1/p)|D|^p - f.v
  double energy(const Eigen::VectorXd& x) const;

 private:
  using Local = Eigen::Matrix<double, 15, 15>;
  using LocalVec = Eigen::Matrix<double, 15, 1>;
  void element(int tri, const Eigen::VectorXd& x, Linearization lin, LocalVec& r, Local* K) const;
  std::array<int, 15> local_rows(int tri) const;
  void build_pattern();
  void scatter(int tri, const LocalVec& r, const Local* K, Eigen::VectorXd* residual,
               Eigen::SparseMatrix<double>* jacobian) const;

  std::shared_ptr<const P2Space> space_;
  double p_, eps_;
  bool convection_;
  Forcing forcing_;
  P2Tabulation tab_;
  std::vector<char> fixed_;  // per global row: boundary velocity dof
  Eigen::SparseMatrix<double> pattern_;
};

struct FlowState {
  std::shared_ptr<const Mesh> mesh;
  std::shared_ptr<const P2Space> space;
  Eigen::VectorXd velocity;  // v = u + lift, [vx | vy]
  Eigen::VectorXd lift;      // interpolated carrier with exact cut-face fluxes
  Eigen::VectorXd pressure;  // zero mean
  std::vector<double> outlet_flux;  // indexed like the outlets
  SolverConfig config;
  double epsilon = 0.0;
  std::vector<IterationRecord> history;

  Eigen::VectorXd u() const { return velocity - lift; }
  /// Packed unknowns for the Assembler.
  Eigen::VectorXd packed() const;
};

/// Mean of a P1 field over the mesh.
double p1_mean(const Mesh& mesh, const Eigen::VectorXd& values);

/// Interpolant of the carrier at all P2 dofs; cut-face dofs are scaled so that the
/// discrete flux through each cut face equals the outlet flux.
Eigen::VectorXd carrier_lift(const P2Space& space, const CarrierField& carrier);

/// Flux of a P2 velocity through the mesh edges of a section (Simpson per edge, exact).
double section_flux(const P2Space& space, const Eigen::VectorXd& velocity, const std::vector<Edge>& edges);

struct SolveOptions {
  Forcing forcing;
  /// Initial u on this mesh (boundary entries are ignored).
  std::optional<Eigen::VectorXd> initial_u;
  std::optional<Eigen::VectorXd> initial_pressure;
};

/// Picard to picard_tol, then damped Newton to newton_tol. Throws NonlinearDivergence,
/// NumericalBlowup or LinearSolveFailure.
FlowState solve_truncated(const CutDomain& cd, std::shared_ptr<const Mesh> mesh, const CarrierField& carrier,
                          const SolverConfig& config, const SolveOptions& options = {});

/// Reusable sparse LU for matrices with a fixed pattern.
class SparseLU {
 public:
  SparseLU();
  ~SparseLU();
  SparseLU(const SparseLU&) = delete;
  SparseLU& operator=(const SparseLU&) = delete;
  void factorize(const Eigen::SparseMatrix<double>& A);
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

void write_convergence_csv(const FlowState& state, std::ostream& out);
/// Legacy VTK: P1 view of the velocity and pressure at vertices, |D(v)| and |S| per cell.
void write_vtk(const FlowState& state, std::ostream& out);

}  // namespace pflux
