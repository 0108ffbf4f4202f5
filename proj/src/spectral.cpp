#include "bicon/spectral.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace bicon {

EigenDecomposition eigendecompose(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("eigendecompose: matrix not square");
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10)
    throw std::invalid_argument("eigendecompose: matrix asymmetric by " + std::to_string(asym));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigendecompose: solver failed");
  EigenDecomposition out;
  out.values = solver.eigenvalues();   // ascending
  out.vectors = solver.eigenvectors(); // orthonormal columns
  return out;
}

double min_eigen_gap(const Eigen::MatrixXd& m) {
  const Eigen::VectorXd vals = eigendecompose(m).values;
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i + 1 < vals.size(); ++i)
    best = std::min(best, vals[i + 1] - vals[i]);
  return best;
}

double ExactEigenvalueProvider::kth_smallest(const Eigen::MatrixXd& symmetric, int k) {
  if (k < 1 || k > symmetric.rows())
    throw std::invalid_argument("kth_smallest: index out of range");
  return eigendecompose(symmetric).values[k - 1];
}

double biconnectivity_bound(const WeightedGraph& g, int focal, double epsilon) {
  if (focal < 0 || focal >= g.size())
    throw std::invalid_argument("biconnectivity_bound: focal node out of range");
  const double row_sum = g.weights().row(focal).sum();
  return epsilon * std::sqrt(static_cast<double>(g.size())) * row_sum;
}

BiconnectivityVerdict check_biconnectivity_condition(const WeightedGraph& g, int focal,
                                                     double epsilon,
                                                     EigenvalueProvider& provider) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("check: epsilon must be positive");
  if (g.size() < 3) throw std::domain_error("check: need at least 3 nodes");
  if (!is_connected(g)) throw std::domain_error("check: graph not connected");

  BiconnectivityVerdict v;
  v.focal = focal;
  v.epsilon = epsilon;
  v.locally_biconnected = is_locally_biconnected(g, focal);
  if (v.locally_biconnected) {
    // Local block already rules the node out as an articulation point.
    v.passed = true;
    return v;
  }
  const PerturbedLaplacian pl = perturb(g, focal, epsilon);
  v.lambda3 = provider.kth_smallest(pl.matrix, 3);
  v.bound = biconnectivity_bound(g, focal, epsilon);
  v.passed = *v.lambda3 > *v.bound;  // strict
  return v;
}

}  // namespace bicon
