#include "bicon/graph.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace bicon {

double distance(const Position& a, const Position& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

double CommModel::weight(double dist) const {
  if (dist > radius) return 0.0;
  return std::exp(-(dist * dist) / (2.0 * sigma));
}

void CommModel::validate() const {
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw std::invalid_argument("CommModel: radius must be positive");
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("CommModel: sigma must be positive");
}

WeightedGraph::WeightedGraph(int n) {
  if (n < 0) throw std::invalid_argument("WeightedGraph: negative node count");
  weights_ = Eigen::MatrixXd::Zero(n, n);
}

WeightedGraph::WeightedGraph(Eigen::MatrixXd weights) : weights_(std::move(weights)) {
  const auto n = weights_.rows();
  if (weights_.cols() != n) throw std::invalid_argument("WeightedGraph: matrix not square");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (weights_(i, i) != 0.0)
      throw std::invalid_argument("WeightedGraph: nonzero diagonal at " + std::to_string(i));
    for (Eigen::Index j = 0; j < n; ++j) {
      const double w = weights_(i, j);
      if (!std::isfinite(w) || w < 0.0)
        throw std::invalid_argument("WeightedGraph: invalid weight at (" + std::to_string(i) +
                                    "," + std::to_string(j) + ")");
      if (w != weights_(j, i))
        throw std::invalid_argument("WeightedGraph: asymmetric weights at (" +
                                    std::to_string(i) + "," + std::to_string(j) + ")");
    }
  }
}

void WeightedGraph::set_weight(int i, int j, double w) {
  if (i < 0 || j < 0 || i >= size() || j >= size())
    throw std::invalid_argument("WeightedGraph::set_weight: node out of range");
  if (i == j) throw std::invalid_argument("WeightedGraph::set_weight: self loop");
  if (!std::isfinite(w) || w < 0.0)
    throw std::invalid_argument("WeightedGraph::set_weight: invalid weight");
  weights_(i, j) = w;
  weights_(j, i) = w;
}

std::vector<int> WeightedGraph::neighbors(int i) const {
  std::vector<int> out;
  for (int j = 0; j < size(); ++j)
    if (j != i && weights_(i, j) > kEdgeWeightFloor) out.push_back(j);
  return out;
}

int WeightedGraph::edge_count() const {
  int c = 0;
  for (int i = 0; i < size(); ++i)
    for (int j = i + 1; j < size(); ++j)
      if (weights_(i, j) > kEdgeWeightFloor) ++c;
  return c;
}

const char* to_string(BiconnectivityStatus s) {
  switch (s) {
    case BiconnectivityStatus::Biconnected: return "biconnected";
    case BiconnectivityStatus::NotBiconnected: return "not-biconnected";
    case BiconnectivityStatus::Disconnected: return "disconnected";
    case BiconnectivityStatus::TooSmall: return "too-small";
  }
  return "?";
}

WeightedGraph build_adjacency(const std::vector<Position>& positions, const CommModel& model) {
  model.validate();
  const int n = static_cast<int>(positions.size());
  for (int i = 0; i < n; ++i)
    if (!std::isfinite(positions[i].x) || !std::isfinite(positions[i].y))
      throw std::invalid_argument("build_adjacency: non-finite position at node " +
                                  std::to_string(i));
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double a = model.weight(distance(positions[i], positions[j]));
      w(i, j) = a;
      w(j, i) = a;
    }
  }
  return WeightedGraph(std::move(w));
}

Eigen::MatrixXd laplacian(const WeightedGraph& g) {
  const Eigen::MatrixXd& a = g.weights();
  Eigen::MatrixXd l = -a;
  l.diagonal() = a.rowwise().sum();
  return l;
}

WeightedGraph perturbed_graph(const WeightedGraph& g, int focal, double epsilon) {
  if (focal < 0 || focal >= g.size())
    throw std::invalid_argument("perturbed_graph: focal node out of range");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw std::invalid_argument("perturbed_graph: epsilon must be positive");
  Eigen::MatrixXd w = g.weights();
  w.row(focal) *= epsilon;
  w.col(focal) *= epsilon;
  w(focal, focal) = 0.0;
  return WeightedGraph(std::move(w));
}

PerturbedLaplacian perturb(const WeightedGraph& g, int focal, double epsilon) {
  PerturbedLaplacian out;
  out.focal = focal;
  out.epsilon = epsilon;
  out.matrix = laplacian(perturbed_graph(g, focal, epsilon));
  return out;
}

WeightedGraph reduced_graph(const WeightedGraph& g, int i) {
  const int n = g.size();
  if (n < 2) throw std::domain_error("reduced_graph: need at least two nodes");
  if (i < 0 || i >= n) throw std::invalid_argument("reduced_graph: node out of range");
  std::vector<int> keep;
  keep.reserve(n - 1);
  for (int j = 0; j < n; ++j)
    if (j != i) keep.push_back(j);
  return induced_subgraph(g, keep);
}

WeightedGraph induced_subgraph(const WeightedGraph& g, const std::vector<int>& nodes) {
  const int m = static_cast<int>(nodes.size());
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      if (a != b) w(a, b) = g.weight(nodes[a], nodes[b]);
  return WeightedGraph(std::move(w));
}

bool is_connected(const WeightedGraph& g) {
  const int n = g.size();
  if (n == 0) throw std::domain_error("is_connected: empty graph");
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v = 0; v < n; ++v) {
      if (!seen[v] && g.weight(u, v) > kEdgeWeightFloor) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count == n;
}

std::set<int> articulation_points(const WeightedGraph& g) {
  const int n = g.size();
  if (!is_connected(g)) throw std::domain_error("articulation_points: graph not connected");

  std::vector<int> disc(n, -1), low(n, -1), parent(n, -1);
  std::set<int> points;
  int timer = 0;

  std::function<void(int)> dfs = [&](int u) {
    disc[u] = low[u] = timer++;
    int children = 0;
    for (int v = 0; v < n; ++v) {
      if (v == u || g.weight(u, v) <= kEdgeWeightFloor) continue;
      if (disc[v] == -1) {
        ++children;
        parent[v] = u;
        dfs(v);
        low[u] = std::min(low[u], low[v]);
        if (parent[u] == -1 && children > 1) points.insert(u);
        if (parent[u] != -1 && low[v] >= disc[u]) points.insert(u);
      } else if (v != parent[u]) {
        low[u] = std::min(low[u], disc[v]);
      }
    }
  };
  dfs(0);
  return points;
}

bool is_biconnected(const WeightedGraph& g) {
  if (g.size() < 3)
    throw std::domain_error("is_biconnected: undefined for fewer than 3 nodes");
  if (!is_connected(g)) return false;
  return articulation_points(g).empty();
}

BiconnectivityStatus classify_biconnectivity(const WeightedGraph& g) {
  if (g.size() < 3) return BiconnectivityStatus::TooSmall;
  if (!is_connected(g)) return BiconnectivityStatus::Disconnected;
  return articulation_points(g).empty() ? BiconnectivityStatus::Biconnected
                                        : BiconnectivityStatus::NotBiconnected;
}

bool is_locally_biconnected(const WeightedGraph& g, int i) {
  if (i < 0 || i >= g.size())
    throw std::invalid_argument("is_locally_biconnected: node out of range");
  std::vector<int> nodes{i};
  for (int v : g.neighbors(i)) nodes.push_back(v);
  if (nodes.size() < 3) return false;
  const WeightedGraph sub = induced_subgraph(g, nodes);
  if (!is_connected(sub)) return false;
  return articulation_points(sub).empty();
}

}  // namespace bicon
