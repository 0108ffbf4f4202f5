#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "bicon/estimator.hpp"
#include "bicon/graph.hpp"

namespace test_support {

struct GeometricInstance {
  std::vector<bicon::Position> positions;
  bicon::WeightedGraph graph;
};

inline bicon::CommModel default_model() { return bicon::CommModel{0.5, 0.125}; }

/// Connected random geometric graph on the unit square (resamples until
/// connected). Deterministic in the seed.
inline GeometricInstance random_geometric_graph(std::uint64_t seed, int n,
                                                const bicon::CommModel& model = default_model()) {
  std::uint64_t state = bicon::mix_seed(seed);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    std::vector<bicon::Position> pos(n);
    for (int i = 0; i < n; ++i) {
      pos[i].x = 0.5 * (bicon::uniform_pm1(state) + 1.0);
      pos[i].y = 0.5 * (bicon::uniform_pm1(state) + 1.0);
    }
    bicon::WeightedGraph g = bicon::build_adjacency(pos, model);
    if (bicon::is_connected(g)) return {std::move(pos), std::move(g)};
  }
  throw std::runtime_error("random_geometric_graph: no connected sample found");
}

/// Independent articulation oracle: delete each node and re-test
/// connectivity by traversal.
inline std::set<int> brute_force_articulation(const bicon::WeightedGraph& g) {
  std::set<int> out;
  for (int i = 0; i < g.size(); ++i)
    if (!bicon::is_connected(bicon::reduced_graph(g, i))) out.insert(i);
  return out;
}

/// Roots of the characteristic polynomial of a symmetric 3x3 matrix via
/// the trigonometric method, ascending. Independent of the library
/// eigensolver.
inline std::vector<double> charpoly_eigenvalues_3x3(const Eigen::MatrixXd& m) {
  const double p1 = m(0, 1) * m(0, 1) + m(0, 2) * m(0, 2) + m(1, 2) * m(1, 2);
  const double q = m.trace() / 3.0;
  const double p2 = (m(0, 0) - q) * (m(0, 0) - q) + (m(1, 1) - q) * (m(1, 1) - q) +
                    (m(2, 2) - q) * (m(2, 2) - q) + 2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);
  if (p < 1e-300) return {q, q, q};
  const Eigen::Matrix3d b = (m - q * Eigen::Matrix3d::Identity()) / p;
  double r = b.determinant() / 2.0;
  r = std::clamp(r, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  const double l1 = q + 2.0 * p * std::cos(phi);
  const double l3 = q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
  const double l2 = 3.0 * q - l1 - l3;
  std::vector<double> vals{l1, l2, l3};
  std::sort(vals.begin(), vals.end());
  return vals;
}

/// Dense M = k (L (x) I + blockdiag(P_i)) assembled with an explicit
/// Kronecker product, independent of the estimator module internals.
inline Eigen::MatrixXd kron_oracle_matrix(const bicon::WeightedGraph& g,
                                          const Eigen::MatrixXd& shifted, double gain) {
  const int n = g.size();
  const Eigen::MatrixXd l = bicon::laplacian(g);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd kron(n * n, n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) kron.block(i * n, j * n, n, n) = l(i, j) * eye;
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n * n, n * n);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd col = shifted.col(i);
    p.block(i * n, i * n, n, n) = col * col.transpose() / col.squaredNorm();
  }
  return gain * (kron + p);
}

inline Eigen::VectorXd kron_vec(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i)
    out.segment(i * b.size(), b.size()) = a[i] * b;
  return out;
}

inline double angle_between(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double c = std::abs(a.dot(b)) / (a.norm() * b.norm());
  return std::acos(std::min(c, 1.0));
}

inline bicon::WeightedGraph unit_path(int n) {
  bicon::WeightedGraph g(n);
  for (int i = 0; i + 1 < n; ++i) g.set_weight(i, i + 1, 1.0);
  return g;
}

inline bicon::WeightedGraph unit_cycle(int n) {
  bicon::WeightedGraph g = unit_path(n);
  g.set_weight(n - 1, 0, 1.0);
  return g;
}

inline bicon::WeightedGraph unit_complete(int n) {
  bicon::WeightedGraph g(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) g.set_weight(i, j, 1.0);
  return g;
}

/// Two triangles sharing vertex 0.
inline bicon::WeightedGraph bowtie() {
  bicon::WeightedGraph g(5);
  g.set_weight(0, 1, 1.0);
  g.set_weight(0, 2, 1.0);
  g.set_weight(1, 2, 1.0);
  g.set_weight(0, 3, 1.0);
  g.set_weight(0, 4, 1.0);
  g.set_weight(3, 4, 1.0);
  return g;
}

}  // namespace test_support
