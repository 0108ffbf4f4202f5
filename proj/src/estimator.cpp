#include "bicon/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "bicon/spectral.hpp"

namespace bicon {

namespace {

constexpr double kZeroColumnTol = 1e-300;

double angle_between(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return M_PI / 2.0;
  double c = std::abs(a.dot(b)) / (na * nb);
  c = std::min(c, 1.0);
  return std::acos(c);
}

// Eigenvector of `base` whose eigenvalue is nearest `shift`, unit norm.
Eigen::VectorXd reference_eigenvector(const Eigen::MatrixXd& base, double shift) {
  const EigenDecomposition ed = eigendecompose(base);
  Eigen::Index best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < ed.values.size(); ++k) {
    const double d = std::abs(ed.values[k] - shift);
    if (d < best_dist) {
      best_dist = d;
      best = k;
    }
  }
  return ed.vectors.col(best);
}

void fix_sign(Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-12) {
      if (v[i] < 0.0) v = -v;
      return;
    }
  }
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed) {
  // splitmix64
  seed += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = seed;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double uniform_pm1(std::uint64_t& state) {
  state = state * 6364136223846793005ULL + 1442695040888963407ULL;
  const std::uint64_t bits = (state >> 11);  // top 53 bits
  const double u = static_cast<double>(bits) * (1.0 / 9007199254740992.0);  // [0,1)
  return 2.0 * u - 1.0;
}

ShiftedLaplacian build_shifted(const Eigen::MatrixXd& base, double shift) {
  if (base.rows() != base.cols())
    throw std::invalid_argument("build_shifted: matrix not square");
  const double asym = (base - base.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10) throw std::invalid_argument("build_shifted: matrix asymmetric");
  ShiftedLaplacian out;
  out.base = base;
  out.shift = shift;
  out.matrix = base - shift * Eigen::MatrixXd::Identity(base.rows(), base.cols());
  return out;
}

ProjectorBlocks build_projectors(const ShiftedLaplacian& sl) {
  const Eigen::Index n = sl.matrix.rows();
  ProjectorBlocks out;
  out.blocks.reserve(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd col = sl.matrix.col(i);
    const double sq = col.squaredNorm();
    if (sq <= kZeroColumnTol)
      throw DegenerateColumnError("build_projectors: zero column " + std::to_string(i));
    out.blocks.emplace_back((col * col.transpose()) / sq);
  }
  return out;
}

Eigen::VectorXd agent_derivative(int i, const Eigen::VectorXd& z_i,
                                 const std::vector<NeighborValue>& neighbors,
                                 const Eigen::MatrixXd& projector, double gain) {
  (void)i;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(z_i.size());
  for (const NeighborValue& nb : neighbors) acc += nb.weight * (nb.z - z_i);
  acc -= projector * z_i;
  return gain * acc;
}

Eigen::VectorXd stacked_derivative(const Eigen::VectorXd& z, const WeightedGraph& g,
                                   const ProjectorBlocks& projectors, double gain) {
  const int n = g.size();
  Eigen::VectorXd out(n * n);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd z_i = z.segment(i * n, n);
    std::vector<NeighborValue> nbs;
    for (int j : g.neighbors(i)) nbs.push_back({g.weight(i, j), z.segment(j * n, n)});
    out.segment(i * n, n) = agent_derivative(i, z_i, nbs, projectors.blocks[i], gain);
  }
  return out;
}

Eigen::MatrixXd estimator_matrix(const WeightedGraph& g, const ProjectorBlocks& projectors,
                                 double gain) {
  const int n = g.size();
  const Eigen::MatrixXd l = laplacian(g);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n * n, n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j)
      m.block(i * n, j * n, n, n) = l(i, j) * Eigen::MatrixXd::Identity(n, n);
    m.block(i * n, i * n, n, n) += projectors.blocks[i];
  }
  return gain * m;
}

double default_step_size(const WeightedGraph& g, double gain) {
  double max_deg = 0.0;
  for (int i = 0; i < g.size(); ++i) max_deg = std::max(max_deg, g.degree(i));
  const double spectral_bound = gain * (2.0 * max_deg + 1.0);  // Gershgorin on M
  return 0.1 / std::max(spectral_bound, 1e-12);
}

namespace {

struct FastDynamics {
  // One derivative evaluation of all agents, O(n * (deg + 1) * n) with
  // the rank-one projector applied through its generating column.
  const WeightedGraph& g;
  int n;
  std::vector<std::vector<std::pair<int, double>>> adj;
  std::vector<Eigen::VectorXd> cols;  // shifted Laplacian columns
  std::vector<double> col_sq;
  double gain;

  FastDynamics(const WeightedGraph& graph, const ShiftedLaplacian& sl, double k)
      : g(graph), n(graph.size()), gain(k) {
    adj.resize(n);
    for (int i = 0; i < n; ++i)
      for (int j : g.neighbors(i)) adj[i].push_back({j, g.weight(i, j)});
    cols.reserve(n);
    col_sq.reserve(n);
    for (int i = 0; i < n; ++i) {
      cols.emplace_back(sl.matrix.col(i));
      const double sq = cols.back().squaredNorm();
      if (sq <= kZeroColumnTol)
        throw DegenerateColumnError("integrate: zero shifted-Laplacian column " +
                                    std::to_string(i));
      col_sq.push_back(sq);
    }
  }

  void eval(const std::vector<Eigen::VectorXd>& z, std::vector<Eigen::VectorXd>& dz) const {
    for (int i = 0; i < n; ++i) {
      dz[i].setZero();
      for (const auto& [j, w] : adj[i]) dz[i] += w * (z[j] - z[i]);
      dz[i] -= (cols[i].dot(z[i]) / col_sq[i]) * cols[i];
      dz[i] *= gain;
    }
  }
};

}  // namespace

EstimatorReport integrate(const EstimatorState& initial, const ShiftedLaplacian& sl,
                          const WeightedGraph& graph, double duration, double h,
                          const IntegrateOptions& opts) {
  const int n = graph.size();
  if (static_cast<int>(initial.z.size()) != n)
    throw std::invalid_argument("integrate: state has wrong agent count");
  for (const auto& zi : initial.z)
    if (zi.size() != n) throw std::invalid_argument("integrate: agent vector has wrong size");
  if (!(h > 0.0)) throw std::invalid_argument("integrate: step size must be positive");

  const FastDynamics dyn(graph, sl, initial.gain);
  const Eigen::VectorXd ref = reference_eigenvector(sl.base, sl.shift);

  std::vector<Eigen::VectorXd> z = initial.z;
  std::vector<Eigen::VectorXd> k1(n), k2(n), k3(n), k4(n), tmp(n);
  for (int i = 0; i < n; ++i) {
    k1[i].resize(n);
    k2[i].resize(n);
    k3[i].resize(n);
    k4[i].resize(n);
    tmp[i].resize(n);
  }

  auto state_norm = [&] {
    double s = 0.0;
    for (const auto& zi : z) s += zi.squaredNorm();
    return std::sqrt(s);
  };
  auto max_angle_now = [&] {
    double worst = 0.0;
    for (const auto& zi : z) worst = std::max(worst, angle_between(zi, ref));
    return worst;
  };

  EstimatorReport report;
  report.reference = ref;
  report.step_size = h;

  const long max_steps = static_cast<long>(std::ceil(duration / h));
  double window_norm = state_norm();
  std::deque<double> angle_history;

  double time = initial.time;
  long step_count = 0;
  double threshold_time = -1.0;

  double angle = max_angle_now();
  if (opts.stop_alignment_tol >= 0.0 && angle <= opts.report_tol) threshold_time = time;

  while (step_count < max_steps) {
    if (opts.use_euler) {
      dyn.eval(z, k1);
      for (int i = 0; i < n; ++i) z[i] += h * k1[i];
    } else {
      dyn.eval(z, k1);
      for (int i = 0; i < n; ++i) tmp[i] = z[i] + (0.5 * h) * k1[i];
      dyn.eval(tmp, k2);
      for (int i = 0; i < n; ++i) tmp[i] = z[i] + (0.5 * h) * k2[i];
      dyn.eval(tmp, k3);
      for (int i = 0; i < n; ++i) tmp[i] = z[i] + h * k3[i];
      dyn.eval(tmp, k4);
      for (int i = 0; i < n; ++i)
        z[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    ++step_count;
    time += h;

    angle = max_angle_now();
    if (threshold_time < 0.0 && angle <= opts.report_tol) threshold_time = time;

    // divergence check over a fixed window
    if (step_count % 50 == 0) {
      const double now_norm = state_norm();
      if (now_norm > 10.0 * std::max(window_norm, 1e-30))
        throw InstabilityError("integrate: state norm grew more than 10x over 50 steps; "
                               "h*k = " + std::to_string(h * initial.gain));
      window_norm = now_norm;
    }

    if (opts.stop_alignment_tol >= 0.0 && angle <= opts.stop_alignment_tol) break;

    angle_history.push_back(angle);
    if (static_cast<int>(angle_history.size()) > opts.stall_window) {
      angle_history.pop_front();
      double lo = angle_history.front(), hi = angle_history.front();
      for (double a : angle_history) {
        lo = std::min(lo, a);
        hi = std::max(hi, a);
      }
      if (hi - lo < opts.stall_tol) break;
    }
  }

  report.final_state.z = std::move(z);
  report.final_state.gain = initial.gain;
  report.final_state.time = time;
  report.agent_angles.clear();
  for (const auto& zi : report.final_state.z)
    report.agent_angles.push_back(angle_between(zi, ref));
  report.max_angle = *std::max_element(report.agent_angles.begin(), report.agent_angles.end());
  report.converged = report.max_angle <= opts.report_tol;
  report.convergence_time = time;
  report.time_to_threshold = threshold_time;
  report.steps = step_count;
  return report;
}

WeightedGraph ensure_simple_spectrum(const WeightedGraph& g, std::uint64_t seed,
                                     double gap_tol, int max_attempts) {
  if (min_eigen_gap(laplacian(g)) > gap_tol) return g;
  std::uint64_t state = mix_seed(seed);
  WeightedGraph out = g;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    Eigen::MatrixXd w = out.weights();
    const int n = out.size();
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (w(i, j) > kEdgeWeightFloor) {
          const double bump = 0.5e-6 * (uniform_pm1(state) + 1.0);  // [0, 1e-6]
          w(i, j) += bump;
          w(j, i) = w(i, j);
        }
      }
    }
    out = WeightedGraph(std::move(w));
    if (min_eigen_gap(laplacian(out)) > gap_tol) return out;
  }
  throw std::runtime_error("ensure_simple_spectrum: spectrum still degenerate after " +
                           std::to_string(max_attempts) + " attempts");
}

Eigen::VectorXd estimate_eigenvector(const WeightedGraph& graph, double lambda_shift,
                                     double gain, std::uint64_t seed,
                                     const EstimateOptions& opts, EstimatorReport* report) {
  if (!is_connected(graph)) throw std::domain_error("estimate_eigenvector: graph not connected");
  if (!(gain > 0.0)) throw std::invalid_argument("estimate_eigenvector: gain must be positive");
  const int n = graph.size();

  WeightedGraph work = graph;
  double shift = lambda_shift;
  bool tie_fallback = false;

  // A tied eigenvalue leaves the consensus limit direction ambiguous;
  // re-randomize the edge weights slightly and re-target the same index.
  {
    const EigenDecomposition ed = eigendecompose(laplacian(work));
    Eigen::Index idx = 0;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < ed.values.size(); ++k) {
      const double d = std::abs(ed.values[k] - lambda_shift);
      if (d < best) {
        best = d;
        idx = k;
      }
    }
    double gap = std::numeric_limits<double>::infinity();
    if (idx > 0) gap = std::min(gap, ed.values[idx] - ed.values[idx - 1]);
    if (idx + 1 < ed.values.size()) gap = std::min(gap, ed.values[idx + 1] - ed.values[idx]);
    if (gap < 1e-9) {
      work = ensure_simple_spectrum(work, mix_seed(seed ^ 0x7a11bacULL));
      shift = eigendecompose(laplacian(work)).values[idx];
      tie_fallback = true;
    }
  }

  const ShiftedLaplacian sl = build_shifted(laplacian(work), shift);
  const double h = opts.step_size > 0.0 ? opts.step_size : default_step_size(work, gain);
  const double duration = opts.max_duration_factor / gain;

  // Seeded start with a guaranteed component along the consensus target.
  const Eigen::VectorXd ref = reference_eigenvector(sl.base, sl.shift);
  Eigen::VectorXd kernel_dir(n * n);
  for (int i = 0; i < n; ++i) kernel_dir.segment(i * n, n) = ref;
  kernel_dir.normalize();

  std::uint64_t state = mix_seed(seed);
  EstimatorState init;
  init.gain = gain;
  init.time = 0.0;
  bool seeded = false;
  for (int attempt = 0; attempt < 64 && !seeded; ++attempt) {
    Eigen::VectorXd flat(n * n);
    for (Eigen::Index q = 0; q < flat.size(); ++q) flat[q] = uniform_pm1(state);
    if (std::abs(flat.dot(kernel_dir)) < 1e-6) continue;
    init.z.assign(n, Eigen::VectorXd(n));
    for (int i = 0; i < n; ++i) init.z[i] = flat.segment(i * n, n);
    seeded = true;
  }
  if (!seeded)
    throw NonConvergenceError("estimate_eigenvector: could not seed a usable start");

  IntegrateOptions iopts = opts.integrate;
  iopts.stop_alignment_tol = opts.alignment_tol;
  iopts.report_tol = opts.alignment_tol;

  EstimatorReport local = integrate(init, sl, work, duration, h, iopts);
  local.tie_fallback = tie_fallback;
  if (report) *report = local;
  if (!local.converged)
    throw NonConvergenceError(
        "estimate_eigenvector: max angle " + std::to_string(local.max_angle) +
        " rad after t=" + std::to_string(local.convergence_time) + " (" +
        std::to_string(local.steps) + " steps, h=" + std::to_string(local.step_size) + ")");

  // Average the agent estimates, normalize, fix the sign.
  Eigen::VectorXd avg = Eigen::VectorXd::Zero(n);
  for (const auto& zi : local.final_state.z) avg += zi;
  const double norm = avg.norm();
  if (norm == 0.0) throw NonConvergenceError("estimate_eigenvector: zero consensus state");
  avg /= norm;
  fix_sign(avg);
  return avg;
}

}  // namespace bicon
