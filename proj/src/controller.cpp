#include "bicon/controller.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bicon {

namespace {

double axis_component(const Position& a, const Position& b, Axis axis) {
  return axis == Axis::X ? a.x - b.x : a.y - b.y;
}

}  // namespace

Eigen::MatrixXd laplacian_position_derivative(const std::vector<Position>& positions,
                                              const CommModel& model, int i, Axis axis,
                                              double epsilon) {
  model.validate();
  const int n = static_cast<int>(positions.size());
  if (i < 0 || i >= n)
    throw std::invalid_argument("laplacian_position_derivative: node out of range");

  Eigen::MatrixXd dl = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    if (j == i) continue;
    const double d = distance(positions[i], positions[j]);
    const double a = model.weight(d);
    if (a <= 0.0) continue;  // beyond the radius: flat branch
    const double da = -epsilon * a * axis_component(positions[i], positions[j], axis) /
                      model.sigma;
    // d(D - A): off-diagonal entries are -da, degree terms absorb +da.
    dl(i, j) = -da;
    dl(j, i) = -da;
    dl(i, i) += da;
    dl(j, j) += da;
  }
  return dl;
}

Eigen::Vector2d eigenvalue_gradient(const GradientInput& inp) {
  return eigenvalue_gradient(inp, build_adjacency(inp.positions, inp.model));
}

Eigen::Vector2d eigenvalue_gradient(const GradientInput& inp, const WeightedGraph& g) {
  const int n = static_cast<int>(inp.positions.size());
  if (g.size() != n) throw std::invalid_argument("eigenvalue_gradient: size mismatch");
  if (inp.focal < 0 || inp.focal >= n)
    throw std::invalid_argument("eigenvalue_gradient: focal node out of range");
  if (inp.eigvec.size() != n)
    throw std::invalid_argument("eigenvalue_gradient: eigenvector has wrong size");
  if (std::abs(inp.eigvec.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("eigenvalue_gradient: eigenvector not unit length");

  const int i = inp.focal;
  const Position& pi = inp.positions[i];
  Eigen::Vector2d grad = Eigen::Vector2d::Zero();
  for (int j = 0; j < n; ++j) {
    if (j == i) continue;
    const double a = g.weight(i, j);
    if (a <= kEdgeWeightFloor) continue;
    const double mismatch = inp.eigvec[i] - inp.eigvec[j];
    const double c = mismatch * mismatch * inp.epsilon * a / inp.model.sigma;
    grad.x() -= c * (pi.x - inp.positions[j].x);
    grad.y() -= c * (pi.y - inp.positions[j].y);
  }
  return grad;
}

Eigen::Vector2d consensus_control(int i, const std::vector<Position>& positions,
                                  const WeightedGraph& g) {
  const int n = static_cast<int>(positions.size());
  if (g.size() != n) throw std::invalid_argument("consensus_control: size mismatch");
  Eigen::Vector2d u = Eigen::Vector2d::Zero();
  for (int j = 0; j < n; ++j) {
    if (j == i) continue;
    const double a = g.weight(i, j);
    u.x() += a * (positions[j].x - positions[i].x);
    u.y() += a * (positions[j].y - positions[i].y);
  }
  return u;
}

const char* to_string(EnforcementPhase p) {
  switch (p) {
    case EnforcementPhase::CheckLocal: return "CheckLocal";
    case EnforcementPhase::Perturb: return "Perturb";
    case EnforcementPhase::EstimateEigenvalues: return "EstimateEigenvalues";
    case EnforcementPhase::CheckCondition: return "CheckCondition";
    case EnforcementPhase::EstimateEigenvector: return "EstimateEigenvector";
    case EnforcementPhase::GradientMove: return "GradientMove";
    case EnforcementPhase::Done: return "Done";
  }
  return "?";
}

StepOutcome enforcement_step(AgentEnforcementState& state, const EnforcementContext& ctx) {
  if (!ctx.positions || !ctx.graph || !ctx.provider)
    throw std::invalid_argument("enforcement_step: incomplete context");
  const WeightedGraph& g = *ctx.graph;
  const int i = state.agent;

  StepOutcome out;
  switch (state.phase) {
    case EnforcementPhase::CheckLocal: {
      state.phase = is_locally_biconnected(g, i) ? EnforcementPhase::Done
                                                 : EnforcementPhase::Perturb;
      break;
    }
    case EnforcementPhase::Perturb: {
      state.perturbed = perturb(g, i, ctx.epsilon);
      state.perturbed_view = perturbed_graph(g, i, ctx.epsilon);
      state.phase = EnforcementPhase::EstimateEigenvalues;
      break;
    }
    case EnforcementPhase::EstimateEigenvalues: {
      try {
        state.lambda3 = ctx.provider->kth_smallest(state.perturbed.matrix, 3);
        state.phase = EnforcementPhase::CheckCondition;
      } catch (const std::exception& e) {
        out.error = e.what();  // hold in place, retry on the next call
      }
      break;
    }
    case EnforcementPhase::CheckCondition: {
      BiconnectivityVerdict v;
      v.focal = i;
      v.epsilon = ctx.epsilon;
      v.locally_biconnected = false;
      v.lambda3 = state.lambda3;
      v.bound = biconnectivity_bound(g, i, ctx.epsilon);
      v.passed = *v.lambda3 > *v.bound;
      out.verdict = v;
      state.phase = v.passed ? EnforcementPhase::Done : EnforcementPhase::EstimateEigenvector;
      break;
    }
    case EnforcementPhase::EstimateEigenvector: {
      try {
        EstimationInfo info;
        info.method = ctx.method;
        if (ctx.method == EigenvectorMethod::Exact) {
          const EigenDecomposition ed = eigendecompose(state.perturbed.matrix);
          state.eigvec = ed.vectors.col(2);
          info.max_angle = 0.0;
        } else {
          EstimatorReport report;
          state.eigvec = estimate_eigenvector(state.perturbed_view, state.lambda3,
                                              ctx.estimator_gain, ctx.estimator_seed,
                                              ctx.estimator_options, &report);
          info.sim_time = report.convergence_time;
          info.steps = report.steps;
          info.converged = report.converged;
          info.max_angle = report.max_angle;
        }
        out.estimation = info;
        state.phase = EnforcementPhase::GradientMove;
      } catch (const std::exception& e) {
        out.error = e.what();
      }
      break;
    }
    case EnforcementPhase::GradientMove: {
      GradientInput inp;
      inp.focal = i;
      inp.positions = *ctx.positions;
      inp.model = ctx.model;
      inp.eigvec = state.eigvec;
      inp.epsilon = ctx.epsilon;
      Eigen::Vector2d u = ctx.gradient_gain * eigenvalue_gradient(inp, g);
      const double speed = u.norm();
      if (speed > ctx.max_speed) u *= ctx.max_speed / speed;
      out.velocity = u;
      ++state.gradient_moves;
      if (state.gradient_moves >= ctx.max_gradient_moves) state.non_terminated = true;
      state.phase = EnforcementPhase::CheckLocal;
      break;
    }
    case EnforcementPhase::Done:
      break;
  }
  out.phase = state.phase;
  return out;
}

}  // namespace bicon
