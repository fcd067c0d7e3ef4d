// Linearized information system, damped conjugate-gradient solve and the
// batch Gauss-Newton loop.
//
// Sign convention: xi = sum J^T W e and the step is
// delta = -(Omega + lambda I)^-1 xi.
#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "flam/factors.hpp"

namespace flam {

struct SparseSystem {
    StateLayout layout;
    Eigen::SparseMatrix<double> omega;  ///< symmetric, both triangles stored
    Eigen::VectorXd xi;

    [[nodiscard]] std::size_t dim() const { return layout.dim(); }
};

/// Accumulates Omega += J^T W J and xi += J^T W e over every motion and
/// observation factor, linearized at `y`.
[[nodiscard]] SparseSystem assemble(const FlamProblem& problem, const FullState& y);

/// Adds weight * I to the 5x5 block of x_0. Additive, so anchoring twice adds
/// twice the weight.
[[nodiscard]] SparseSystem anchor_initial_state(SparseSystem sys, double weight);

enum class Preconditioner {
    none,
    block_jacobi,    ///< per-variable 5x5 / 2x2 diagonal blocks
    trajectory_map,  ///< block-tridiagonal trajectory chain + dense map block
};

struct CgConfig {
    double relative_tolerance = 1e-8;
    std::size_t max_iterations = 0;  ///< 0 means 10 x dimension
    Preconditioner preconditioner = Preconditioner::trajectory_map;
};

struct CgResult {
    Eigen::VectorXd delta;
    std::size_t iterations = 0;
    double residual_norm = 0.0;  ///< ||(Omega + lambda I) delta + xi||
    bool converged = false;
};

/// Solves (Omega + lambda I) delta + xi = 0 by preconditioned CG. Stops when
/// ||(Omega + lambda I) delta + xi|| <= tol ||xi||. On hitting the iteration
/// cap the best iterate is returned with converged = false.
[[nodiscard]] CgResult solve_damped_cg(const SparseSystem& sys, double lambda,
                                       const CgConfig& config = {});

/// General SPD solve A x = b with the same CG (used for marginals).
[[nodiscard]] CgResult solve_cg(const Eigen::SparseMatrix<double>& A, const StateLayout& layout,
                                const Eigen::VectorXd& b, const CgConfig& config);

struct SolverConfig {
    double damping = 1e-3;
    /// Halve the step until the cost does not increase. Off gives the plain
    /// update y += delta.
    bool line_search = true;
    std::size_t max_step_halvings = 12;
    double anchor_weight = 1e12;
    CgConfig cg;
    std::size_t max_iterations = 20;
    double step_tolerance = 1e-6;  ///< on ||delta||_inf
    double lsf_ridge = 1e-6;       ///< relative ridge for the LSF map fit

    void validate() const;
};

struct IterationRecord {
    std::size_t iteration = 0;
    double cost = 0.0;        ///< after the step
    double step_norm = 0.0;   ///< ||delta||_inf
    std::size_t cg_iterations = 0;
    bool cg_converged = true;
    double damping = 0.0;
    double step_scale = 1.0;  ///< fraction of delta applied
    bool accepted = true;
};

struct OptimizeResult {
    FullState estimate;
    double initial_cost = 0.0;
    std::vector<IterationRecord> iterations;
    bool converged = false;
    bool diverged = false;
    bool stalled = false;  ///< line search found no descent
    /// Anchored system at the final estimate (for marginals).
    SparseSystem final_system;
};

/// Dead-reckoned trajectory from the known initial state plus a ridge
/// least-squares fit of the node velocities to the ADCP samples placed along
/// it. Nodes that no sample touches come out as zero.
[[nodiscard]] FullState initial_guess(const FlamProblem& problem, const SensorLog& log,
                                      const RobotState& x0, double ridge = 1e-6);
[[nodiscard]] FullState initial_guess(const SensorLog& log, const GridSpec& grid,
                                      double ridge = 1e-6);

using IterationObserver = std::function<void(const IterationRecord&)>;

/// Batch Gauss-Newton: relinearize, anchor x_0, damped CG, y += delta, until
/// ||delta||_inf < step_tolerance or max_iterations. Two consecutive cost
/// increases abort with diverged = true.
[[nodiscard]] OptimizeResult optimize(const FlamProblem& problem, FullState initial,
                                      const SolverConfig& config,
                                      const IterationObserver& observer = {});

/// Convenience overload: builds the problem and the DR + LSF initial guess.
[[nodiscard]] OptimizeResult optimize(const SensorLog& log, const GridSpec& grid,
                                      const SolverConfig& config,
                                      const FactorWeights& weights);

struct VariableId {
    enum class Kind { state, node } kind = Kind::state;
    std::size_t index = 0;
};

struct MarginalResult {
    std::vector<Eigen::MatrixXd> blocks;
    bool converged = true;
};

/// Diagonal blocks of (Omega + lambda I)^-1 for the requested variables, one
/// CG solve per column.
[[nodiscard]] MarginalResult marginal_covariance(const SparseSystem& sys, double lambda,
                                                 std::span<const VariableId> variables,
                                                 const CgConfig& config = {});

}  // namespace flam
