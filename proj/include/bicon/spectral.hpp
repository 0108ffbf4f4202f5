#pragma once

#include <Eigen/Dense>

#include <optional>

#include "bicon/graph.hpp"

namespace bicon {

/// Eigenvalues in ascending order, vectors[:,k] paired with values[k],
/// columns orthonormal.
struct EigenDecomposition {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

/// Full symmetric eigendecomposition. Input must be symmetric within
/// 1e-10 entrywise.
EigenDecomposition eigendecompose(const Eigen::MatrixXd& m);

/// Smallest gap between consecutive eigenvalues of a symmetric matrix.
double min_eigen_gap(const Eigen::MatrixXd& m);

/// Source of single eigenvalues for the biconnectivity check. The
/// default implementation is the exact dense solver; a decentralized
/// estimator can be plugged in behind the same call.
class EigenvalueProvider {
 public:
  virtual ~EigenvalueProvider() = default;
  /// k-th smallest eigenvalue, 1-based (k = 1 is the smallest).
  virtual double kth_smallest(const Eigen::MatrixXd& symmetric, int k) = 0;
};

class ExactEigenvalueProvider final : public EigenvalueProvider {
 public:
  double kth_smallest(const Eigen::MatrixXd& symmetric, int k) override;
};

/// Outcome of the spectral biconnectivity test at one focal node.
/// lambda3/bound are empty when the node was locally biconnected and the
/// test was skipped; in that case passed is true by the local criterion.
struct BiconnectivityVerdict {
  int focal = 0;
  double epsilon = 0.0;
  std::optional<double> lambda3;
  std::optional<double> bound;
  bool passed = false;
  bool locally_biconnected = false;
};

/// Threshold the third-smallest eigenvalue of the perturbed Laplacian
/// must exceed: epsilon * sqrt(n) * sum_k a_ik, computed from the
/// unperturbed weights of the focal node.
double biconnectivity_bound(const WeightedGraph& g, int focal, double epsilon);

/// Spectral sufficient test: lambda_3(L^i(eps)) > bound certifies that
/// the graph stays connected if node i drops out. Locally biconnected
/// nodes skip the spectral comparison. Requires a connected graph.
BiconnectivityVerdict check_biconnectivity_condition(const WeightedGraph& g, int focal,
                                                     double epsilon,
                                                     EigenvalueProvider& provider);

}  // namespace bicon
