// Acceptance suite: end-to-end checks of the full pipeline, one
// printed pass/fail line per criterion. Exits nonzero if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "bicon/controller.hpp"
#include "bicon/estimator.hpp"
#include "bicon/graph.hpp"
#include "bicon/sim.hpp"
#include "bicon/spectral.hpp"
#include "support.hpp"

using namespace bicon;
using test_support::random_geometric_graph;

namespace {

struct Criterion {
  const char* name;
  std::function<bool(std::string&)> check;
};

const CommModel kModel{0.5, 0.125};

// 1. Projector and estimator-matrix structure on 100 seeded graphs.
bool lemma_suite(std::string& detail) {
  int graphs = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const int n = 4 + static_cast<int>(seed % 9);  // 4..12
    auto inst = random_geometric_graph(seed * 211 + 5, n, kModel);
    Eigen::MatrixXd l = laplacian(inst.graph);
    if (min_eigen_gap(l) < 1e-9) {
      inst.graph = ensure_simple_spectrum(inst.graph, seed);
      l = laplacian(inst.graph);
    }
    const auto led = eigendecompose(l);
    const auto sl = build_shifted(l, led.values[2]);
    const auto pb = build_projectors(sl);

    for (const auto& p : pb.blocks) {
      if ((p * p - p).cwiseAbs().maxCoeff() > 1e-10) {
        detail = "projector not idempotent at seed " + std::to_string(seed);
        return false;
      }
    }

    const Eigen::MatrixXd m = estimator_matrix(inst.graph, pb, 1.0);
    const auto med = eigendecompose(m);
    if (med.values.minCoeff() < -1e-9) {
      detail = "M not PSD at seed " + std::to_string(seed);
      return false;
    }
    int nulls = 0;
    for (Eigen::Index q = 0; q < med.values.size(); ++q)
      if (med.values[q] < 1e-8) ++nulls;
    if (nulls != 1) {
      detail = "M null space dimension " + std::to_string(nulls) + " at seed " +
               std::to_string(seed);
      return false;
    }

    Eigen::VectorXd kernel = test_support::kron_vec(Eigen::VectorXd::Ones(n), led.vectors.col(2));
    if ((m * kernel).cwiseAbs().maxCoeff() > 1e-9) {
      detail = "replicated eigenvector not in kernel at seed " + std::to_string(seed);
      return false;
    }
    ++graphs;
  }
  detail = std::to_string(graphs) + " graphs";
  return graphs == 100;
}

// 2. Convergence to the reference eigenvector, k=500 strictly faster
// than k=50, for the second- and third-smallest targets.
bool estimator_convergence(std::string& detail) {
  int instances = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto inst = random_geometric_graph(seed * 97 + 41, 8, kModel);
    if (min_eigen_gap(laplacian(inst.graph)) < 1e-9)
      inst.graph = ensure_simple_spectrum(inst.graph, seed);
    const auto led = eigendecompose(laplacian(inst.graph));

    for (int which : {1, 2}) {
      EstimatorReport slow, fast;
      const Eigen::VectorXd v_slow =
          estimate_eigenvector(inst.graph, led.values[which], 50.0, seed + 1, {}, &slow);
      const Eigen::VectorXd v_fast =
          estimate_eigenvector(inst.graph, led.values[which], 500.0, seed + 1, {}, &fast);

      const double a_slow = test_support::angle_between(v_slow, led.vectors.col(which));
      const double a_fast = test_support::angle_between(v_fast, led.vectors.col(which));
      if (a_slow > 1e-3 || a_fast > 1e-3) {
        detail = "alignment failure at seed " + std::to_string(seed);
        return false;
      }
      for (double a : slow.agent_angles)
        if (a > 1e-3) {
          detail = "per-agent angle failure at seed " + std::to_string(seed);
          return false;
        }
      if (!(fast.time_to_threshold < slow.time_to_threshold) || fast.time_to_threshold <= 0.0) {
        detail = "k=500 not faster at seed " + std::to_string(seed) + " (" +
                 std::to_string(fast.time_to_threshold) + " vs " +
                 std::to_string(slow.time_to_threshold) + ")";
        return false;
      }
    }
    ++instances;
  }
  detail = std::to_string(instances) + " instances, both eigenvalue targets";
  return instances == 20;
}

// 3. Analytic gradient of lambda3 against central finite differences.
bool gradient_oracle(std::string& detail) {
  const double eps = 0.05;
  const double h = 1e-6;
  int checked = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 200 && checked < 50; ++seed) {
    const auto inst = random_geometric_graph(seed * 61 + 29, 6, kModel);
    bool near_radius = false;
    for (std::size_t i = 0; i < inst.positions.size() && !near_radius; ++i)
      for (std::size_t j = i + 1; j < inst.positions.size(); ++j)
        if (std::abs(distance(inst.positions[i], inst.positions[j]) - kModel.radius) < 1e-3) {
          near_radius = true;
          break;
        }
    if (near_radius) continue;

    const int focal = static_cast<int>(seed % 6);
    const Eigen::MatrixXd lp = perturb(inst.graph, focal, eps).matrix;
    if (min_eigen_gap(lp) < 1e-5) continue;  // simple-spectrum instances only
    const auto ed = eigendecompose(lp);

    GradientInput inp;
    inp.focal = focal;
    inp.positions = inst.positions;
    inp.model = kModel;
    inp.eigvec = ed.vectors.col(2);
    inp.epsilon = eps;
    const Eigen::Vector2d grad = eigenvalue_gradient(inp);

    Eigen::Vector2d fd;
    for (int axis = 0; axis < 2; ++axis) {
      auto plus = inst.positions;
      auto minus = inst.positions;
      (axis == 0 ? plus[focal].x : plus[focal].y) += h;
      (axis == 0 ? minus[focal].x : minus[focal].y) -= h;
      const double lph = eigendecompose(perturb(build_adjacency(plus, kModel), focal, eps).matrix)
                             .values[2];
      const double lmh = eigendecompose(perturb(build_adjacency(minus, kModel), focal, eps).matrix)
                             .values[2];
      fd[axis] = (lph - lmh) / (2.0 * h);
    }
    const double rel = (grad - fd).norm() / std::max(1.0, fd.norm());
    worst = std::max(worst, rel);
    if (rel > 1e-5) {
      detail = "relative error " + std::to_string(rel) + " at seed " + std::to_string(seed);
      return false;
    }
    ++checked;
  }
  detail = std::to_string(checked) + " instances, worst relative error " + std::to_string(worst);
  return checked == 50;
}

// 4. Soundness of the spectral test at eps = 1e-3 over 200 graphs.
bool spectral_soundness(std::string& detail) {
  ExactEigenvalueProvider provider;
  const double eps = 1e-3;
  int tested = 0, passes = 0, conservative = 0, counterexamples = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const int n = 4 + static_cast<int>(seed % 9);
    const auto inst = random_geometric_graph(seed * 149 + 11, n, kModel);
    for (int i = 0; i < n; ++i) {
      if (is_locally_biconnected(inst.graph, i)) continue;
      const auto v = check_biconnectivity_condition(inst.graph, i, eps, provider);
      ++tested;
      const bool reduced_ok = is_connected(reduced_graph(inst.graph, i));
      if (v.passed) {
        ++passes;
        if (!reduced_ok) ++counterexamples;
      } else if (reduced_ok) {
        ++conservative;
      }
    }
  }
  detail = std::to_string(tested) + " checks, " + std::to_string(passes) + " passes, " +
           std::to_string(counterexamples) + " counterexamples, conservatism rate " +
           std::to_string(tested ? static_cast<double>(conservative) / tested : 0.0);
  return counterexamples == 0 && tested > 0;
}

ScenarioConfig dumbbell_config(bool enforcement) {
  ScenarioConfig c;
  c.positions = dumbbell_layout(7, 0.001);
  c.model = kModel;
  c.dt = 0.01;
  c.duration = 10.0;
  c.seed = 7;
  c.epsilon = 0.05;
  c.consensus = true;
  c.enforcement = enforcement;
  c.gradient_gain = 5.0;
  c.max_speed = 0.3;
  return c;
}

// 5. Event-level reproduction of the two scenario variants.
bool scenario_events(std::string& detail) {
  const SimResult off = run(dumbbell_config(false));
  const SimResult on = run(dumbbell_config(true));

  const bool off_lost = has_event(off, EventKind::ConnectivityLost);
  const bool on_lost = has_event(on, EventKind::ConnectivityLost);
  const bool on_bic = has_event(on, EventKind::BiconnectivityAchieved);
  const bool on_bic_final = on.trajectory.back().biconnected;

  detail = "consensus-only lost=" + std::string(off_lost ? "yes" : "no");
  if (off_lost)
    detail += " @t=" + std::to_string(*first_event_time(off, EventKind::ConnectivityLost));
  detail += "; enforced lost=" + std::string(on_lost ? "yes" : "no") +
            " biconnected=" + std::string(on_bic ? "yes" : "no");
  if (on_bic)
    detail += " @t=" + std::to_string(*first_event_time(on, EventKind::BiconnectivityAchieved));
  return off_lost && !on_lost && on_bic && on_bic_final;
}

// 6. Ascent: a 1e-6 step along the gradient never decreases lambda3.
bool gradient_ascent(std::string& detail) {
  const double eps = 0.05;
  const double step = 1e-6;
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 200 && checked < 50; ++seed) {
    const auto inst = random_geometric_graph(seed * 71 + 33, 6, kModel);
    const int focal = static_cast<int>(seed % 6);
    const Eigen::MatrixXd lp = perturb(inst.graph, focal, eps).matrix;
    if (min_eigen_gap(lp) < 1e-5) continue;
    const auto ed = eigendecompose(lp);

    GradientInput inp;
    inp.focal = focal;
    inp.positions = inst.positions;
    inp.model = kModel;
    inp.eigvec = ed.vectors.col(2);
    inp.epsilon = eps;
    const Eigen::Vector2d grad = eigenvalue_gradient(inp);

    auto moved = inst.positions;
    moved[focal].x += step * grad.x();
    moved[focal].y += step * grad.y();
    const double after =
        eigendecompose(perturb(build_adjacency(moved, kModel), focal, eps).matrix).values[2];
    if (after < ed.values[2] - 1e-12) {
      detail = "descent by " + std::to_string(ed.values[2] - after) + " at seed " +
               std::to_string(seed);
      return false;
    }
    ++checked;
  }
  detail = std::to_string(checked) + " instances";
  return checked == 50;
}

// 7. Bit-identical trajectory output for identical config and seed.
bool determinism(std::string& detail) {
  const ScenarioConfig c = dumbbell_config(true);
  const std::string a = trajectory_csv(run(c));
  const std::string b = trajectory_csv(run(c));
  detail = std::to_string(a.size()) + " bytes compared";
  return !a.empty() && a == b;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"1 lemma suite (projectors, PSD M, simple kernel)", lemma_suite},
      {"2 estimator convergence and gain ordering", estimator_convergence},
      {"3 gradient matches finite differences", gradient_oracle},
      {"4 spectral check soundness", spectral_soundness},
      {"5 dumbbell scenario events", scenario_events},
      {"6 gradient ascent property", gradient_ascent},
      {"7 deterministic trajectories", determinism},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
      ok = c.check(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] criterion %s (%s) [%.1f s]\n", ok ? "PASS" : "FAIL", c.name,
                detail.c_str(), secs);
    if (!ok) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
