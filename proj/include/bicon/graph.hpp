#pragma once

#include <Eigen/Dense>

#include <set>
#include <vector>

namespace bicon {

/// Weights at or below this floor are treated as absent edges by all
/// combinatorial traversals, so floating-point dust cannot create
/// phantom connectivity.
inline constexpr double kEdgeWeightFloor = 1e-15;

struct Position {
  double x = 0.0;
  double y = 0.0;
};

double distance(const Position& a, const Position& b);

/// R-disk communication model: robots within `radius` of each other are
/// linked with weight exp(-d^2 / (2 sigma)), everything farther is not
/// linked at all.
struct CommModel {
  double radius = 0.5;
  double sigma = 0.125;

  double weight(double dist) const;
  void validate() const;  // radius > 0, sigma > 0
};

/// Undirected weighted graph stored as a dense symmetric matrix with a
/// zero diagonal and nonnegative entries.
class WeightedGraph {
 public:
  WeightedGraph() = default;
  explicit WeightedGraph(int n);
  explicit WeightedGraph(Eigen::MatrixXd weights);

  int size() const { return static_cast<int>(weights_.rows()); }
  double weight(int i, int j) const { return weights_(i, j); }
  const Eigen::MatrixXd& weights() const { return weights_; }

  /// Sets both (i,j) and (j,i). Rejects i == j and negative weights.
  void set_weight(int i, int j, double w);

  double degree(int i) const { return weights_.row(i).sum(); }
  std::vector<int> neighbors(int i) const;
  int edge_count() const;

 private:
  Eigen::MatrixXd weights_;
};

/// Laplacian of a perturbed graph in which every weight incident to one
/// focal node has been scaled by epsilon.
struct PerturbedLaplacian {
  int focal = 0;
  double epsilon = 1.0;
  Eigen::MatrixXd matrix;
};

/// Coarse classification used for reporting; `is_biconnected` is the
/// strict predicate and refuses graphs where the notion is undefined.
enum class BiconnectivityStatus { Biconnected, NotBiconnected, Disconnected, TooSmall };

const char* to_string(BiconnectivityStatus s);

WeightedGraph build_adjacency(const std::vector<Position>& positions, const CommModel& model);

/// L = D - A.
Eigen::MatrixXd laplacian(const WeightedGraph& g);

/// Graph with row/column `focal` of the adjacency scaled by epsilon.
WeightedGraph perturbed_graph(const WeightedGraph& g, int focal, double epsilon);

PerturbedLaplacian perturb(const WeightedGraph& g, int focal, double epsilon);

/// Removes node i together with its incident edges.
WeightedGraph reduced_graph(const WeightedGraph& g, int i);

/// Induced subgraph on `nodes` (order preserved).
WeightedGraph induced_subgraph(const WeightedGraph& g, const std::vector<int>& nodes);

bool is_connected(const WeightedGraph& g);

/// Nodes whose removal disconnects g. Classic DFS lowpoint computation;
/// requires a connected input.
std::set<int> articulation_points(const WeightedGraph& g);

/// Connected and free of articulation points. Undefined (throws) for
/// n < 3; a disconnected graph reports false.
bool is_biconnected(const WeightedGraph& g);

BiconnectivityStatus classify_biconnectivity(const WeightedGraph& g);

/// True iff the induced subgraph on {i} and its neighbors is a block.
/// Nodes of degree <= 1 report false (a 2-node subgraph is not a block
/// under the n >= 3 convention).
bool is_locally_biconnected(const WeightedGraph& g, int i);

}  // namespace bicon
