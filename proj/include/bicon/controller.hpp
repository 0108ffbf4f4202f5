#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bicon/estimator.hpp"
#include "bicon/graph.hpp"
#include "bicon/spectral.hpp"

namespace bicon {

enum class Axis { X, Y };

/// d(L^i(eps))/dp_i along one axis, assembled from the R-disk weight
/// derivatives d a_ij/dp_i = -a_ij (p_i - p_j)/sigma. Nonzero in row i,
/// column i and on the diagonal entries of i's neighbors (the degree
/// terms); rows and columns sum to zero.
Eigen::MatrixXd laplacian_position_derivative(const std::vector<Position>& positions,
                                              const CommModel& model, int i, Axis axis,
                                              double epsilon = 1.0);

struct GradientInput {
  int focal = 0;
  std::vector<Position> positions;
  CommModel model;
  Eigen::VectorXd eigvec;  // unit vector
  double epsilon = 1.0;
};

/// Velocity that increases the eigenvalue tracked by inp.eigvec:
///   u = ( v^T dL/dp_x v, v^T dL/dp_y v )
/// evaluated on the perturbed weights, which collapses to the local sum
/// sum_j (v_i - v_j)^2 * d a_ij(eps)/dp_i over the focal node's links.
Eigen::Vector2d eigenvalue_gradient(const GradientInput& inp);

/// Same, with the focal row weights taken from an existing graph
/// instead of being rebuilt from positions.
Eigen::Vector2d eigenvalue_gradient(const GradientInput& inp, const WeightedGraph& g);

/// u_i = sum_j a_ij (p_j - p_i).
Eigen::Vector2d consensus_control(int i, const std::vector<Position>& positions,
                                  const WeightedGraph& g);

/// Per-node enforcement loop, one phase per step call:
///   CheckLocal -> Done                   (locally biconnected)
///   CheckLocal -> Perturb -> EstimateEigenvalues -> CheckCondition
///   CheckCondition -> Done               (spectral check passed)
///   CheckCondition -> EstimateEigenvector -> GradientMove -> CheckLocal
enum class EnforcementPhase {
  CheckLocal,
  Perturb,
  EstimateEigenvalues,
  CheckCondition,
  EstimateEigenvector,
  GradientMove,
  Done,
};

const char* to_string(EnforcementPhase p);

enum class EigenvectorMethod { Exact, Consensus };

struct EstimationInfo {
  EigenvectorMethod method = EigenvectorMethod::Exact;
  double sim_time = 0.0;  // simulated estimator time (0 for exact)
  long steps = 0;
  bool converged = true;
  double max_angle = 0.0;
};

struct AgentEnforcementState {
  int agent = 0;
  EnforcementPhase phase = EnforcementPhase::CheckLocal;
  PerturbedLaplacian perturbed;        // valid from Perturb onward
  WeightedGraph perturbed_view;        // couplings for the estimator
  double lambda3 = 0.0;                // valid from EstimateEigenvalues onward
  Eigen::VectorXd eigvec;              // valid from EstimateEigenvector onward
  long gradient_moves = 0;             // cumulative, survives re-arms
  bool non_terminated = false;         // gradient-move cap exceeded
};

struct EnforcementContext {
  const std::vector<Position>* positions = nullptr;
  const WeightedGraph* graph = nullptr;
  CommModel model;
  double epsilon = 0.05;
  EigenvalueProvider* provider = nullptr;
  EigenvectorMethod method = EigenvectorMethod::Exact;
  double estimator_gain = 500.0;
  std::uint64_t estimator_seed = 0;
  EstimateOptions estimator_options;
  double gradient_gain = 1.0;
  double max_speed = 1.0;              // cap on the gradient velocity
  long max_gradient_moves = 10000;
};

struct StepOutcome {
  EnforcementPhase phase = EnforcementPhase::CheckLocal;  // phase after the step
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
  std::optional<BiconnectivityVerdict> verdict;   // fresh from CheckCondition
  std::optional<EstimationInfo> estimation;       // fresh from EstimateEigenvector
  std::string error;                              // estimation failure, agent held in place
};

/// Executes exactly one phase of the enforcement loop. A nonzero
/// velocity is emitted only by GradientMove; estimation failures leave
/// the phase unchanged and report the error.
StepOutcome enforcement_step(AgentEnforcementState& state, const EnforcementContext& ctx);

}  // namespace bicon
