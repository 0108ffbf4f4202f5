#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "bicon/graph.hpp"

namespace bicon {

/// Laplacian shifted by an eigenvalue estimate: matrix = base - shift*I.
/// The kernel of the shifted matrix is the eigenspace of `base` at
/// `shift`, which is what the consensus estimator converges to.
struct ShiftedLaplacian {
  Eigen::MatrixXd base;
  double shift = 0.0;
  Eigen::MatrixXd matrix;
};

ShiftedLaplacian build_shifted(const Eigen::MatrixXd& base, double shift);

/// Rank-one projectors P_i = l_i l_i^T / (l_i^T l_i) onto the i-th
/// column of the shifted Laplacian, one per agent.
struct ProjectorBlocks {
  std::vector<Eigen::MatrixXd> blocks;
};

struct DegenerateColumnError : std::runtime_error {
  explicit DegenerateColumnError(const std::string& what) : std::runtime_error(what) {}
};

/// Throws DegenerateColumnError if any column of sl.matrix is zero.
ProjectorBlocks build_projectors(const ShiftedLaplacian& sl);

struct NeighborValue {
  double weight = 0.0;
  Eigen::VectorXd z;
};

/// One agent's estimator dynamics. Uses only the agent's own state, its
/// neighbors' states and its own projector:
///   dz_i/dt = k * ( sum_j a_ij (z_j - z_i) - P_i z_i ).
Eigen::VectorXd agent_derivative(int i, const Eigen::VectorXd& z_i,
                                 const std::vector<NeighborValue>& neighbors,
                                 const Eigen::MatrixXd& projector, double gain);

/// All agent derivatives stacked into one vector of length n^2;
/// equals -M z with M = k (L (x) I + P).
Eigen::VectorXd stacked_derivative(const Eigen::VectorXd& z, const WeightedGraph& g,
                                   const ProjectorBlocks& projectors, double gain);

/// Dense M = k (L (x) I + P); used by diagnostics and property checks.
Eigen::MatrixXd estimator_matrix(const WeightedGraph& g, const ProjectorBlocks& projectors,
                                 double gain);

struct EstimatorState {
  std::vector<Eigen::VectorXd> z;  // one length-n vector per agent
  double gain = 1.0;
  double time = 0.0;
};

struct InstabilityError : std::runtime_error {
  explicit InstabilityError(const std::string& what) : std::runtime_error(what) {}
};

struct NonConvergenceError : std::runtime_error {
  explicit NonConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

struct IntegrateOptions {
  /// Alignment (radians) at which the run may stop early; negative
  /// disables the early stop.
  double stop_alignment_tol = 1e-3;
  /// Alignment that counts as converged in the report.
  double report_tol = 1e-3;
  /// Stop when the largest per-agent angle change over the last
  /// `stall_window` steps falls below `stall_tol`.
  double stall_tol = 1e-9;
  int stall_window = 100;
  bool use_euler = false;  // RK4 otherwise
};

struct EstimatorReport {
  EstimatorState final_state;
  Eigen::VectorXd reference;        // unit eigenvector of base nearest the shift
  std::vector<double> agent_angles; // sign-agnostic angles to the reference
  double max_angle = 0.0;
  bool converged = false;
  double convergence_time = 0.0;    // simulated time when the run stopped
  double time_to_threshold = -1.0;  // first time max angle <= report_tol, -1 if never
  long steps = 0;
  double step_size = 0.0;
  bool tie_fallback = false;        // weights were re-randomized to split a tied spectrum
};

/// Step size with margin against the stiffest mode of M, estimated from
/// a degree bound rather than an eigensolve.
double default_step_size(const WeightedGraph& g, double gain);

/// Advances dz/dt = -M z for `duration` (or until converged/stalled)
/// with fixed step h. The graph supplies the consensus couplings; the
/// shifted Laplacian supplies the projectors and the reference
/// eigenvector used for the alignment diagnostics.
EstimatorReport integrate(const EstimatorState& initial, const ShiftedLaplacian& sl,
                          const WeightedGraph& graph, double duration, double h,
                          const IntegrateOptions& opts = {});

struct EstimateOptions {
  double alignment_tol = 1e-3;
  /// Hard cap on simulated duration: max_duration_factor / gain. The
  /// slowest consensus mode decays at roughly gain * gap^2 / |l|^2, so
  /// close eigenvalue pairs need tens of thousands of gain-scaled time
  /// units to reach milliradian alignment; healthy runs stop at the
  /// threshold long before this binds.
  double max_duration_factor = 20000.0;
  double step_size = 0.0;  // 0 = use default_step_size
  IntegrateOptions integrate;
};

/// Runs the consensus estimator from a seeded random start and returns
/// a unit vector (first nonzero entry positive) aligned with the
/// eigenvector of laplacian(graph) at the eigenvalue nearest
/// `lambda_shift`. Throws NonConvergenceError when the alignment
/// tolerance is not reached within the duration cap.
Eigen::VectorXd estimate_eigenvector(const WeightedGraph& graph, double lambda_shift,
                                     double gain, std::uint64_t seed,
                                     const EstimateOptions& opts = {},
                                     EstimatorReport* report = nullptr);

/// Adds seeded uniform perturbations in [0, 1e-6] to the existing edge
/// weights until all Laplacian eigenvalue gaps exceed gap_tol. Returns
/// the input unchanged when the spectrum is already simple.
WeightedGraph ensure_simple_spectrum(const WeightedGraph& g, std::uint64_t seed,
                                     double gap_tol = 1e-9, int max_attempts = 8);

/// Deterministic uniform draw in [-1, 1] (bit-exact across platforms).
double uniform_pm1(std::uint64_t& state);

/// splitmix64 step; used to derive independent deterministic streams.
std::uint64_t mix_seed(std::uint64_t seed);

}  // namespace bicon
