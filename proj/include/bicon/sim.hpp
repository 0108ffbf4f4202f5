#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bicon/controller.hpp"
#include "bicon/graph.hpp"

namespace bicon {

struct ScenarioFormatError : std::runtime_error {
  explicit ScenarioFormatError(const std::string& what) : std::runtime_error(what) {}
};

struct ScenarioConfig {
  std::vector<Position> positions;
  CommModel model;
  double epsilon = 0.05;

  double dt = 0.01;
  double duration = 1.0;
  std::uint64_t seed = 0;

  bool consensus = true;
  bool enforcement = false;
  double gradient_gain = 1.0;
  double max_speed = 1.0;  // cap on the enforcement velocity
  long max_gradient_moves = 10000;

  EigenvectorMethod estimator_method = EigenvectorMethod::Exact;
  double estimator_gain = 500.0;

  void validate() const;
};

/// Key/value text with [section] headers; '#' and ';' comments.
/// Positions come from a [positions] section (index = x y) or from a
/// [layout] section naming a built-in generator.
ScenarioConfig parse_scenario(const std::string& text);
ScenarioConfig load_scenario_file(const std::string& path);
std::string to_scenario_text(const ScenarioConfig& config);

/// Two clusters bridged by one apex node; the bridge chain holds the
/// only articulation points. jitter displaces every coordinate by a
/// seeded uniform draw.
std::vector<Position> dumbbell_layout(std::uint64_t seed, double jitter = 0.003);

enum class EventKind {
  GraphChanged,
  ConnectivityLost,
  BiconnectivityAchieved,
  CheckVerdict,
  EstimationCompleted,
  EnforcementNonTermination,
};

const char* to_string(EventKind k);

struct Event {
  double t = 0.0;
  EventKind kind = EventKind::GraphChanged;
  nlohmann::json payload;
};

struct TrajectorySample {
  double t = 0.0;
  std::vector<Position> positions;
  double lambda2 = 0.0;
  double lambda3 = 0.0;
  bool biconnected = false;
};

struct World {
  std::vector<Position> positions;
  WeightedGraph graph;
  double time = 0.0;
};

World make_world(const std::vector<Position>& positions, const CommModel& model);

/// Single-integrator update p_i += dt * u_i followed by a graph rebuild.
/// Velocities must be finite.
World step(const World& world, std::span<const Eigen::Vector2d> velocities, double dt,
           const CommModel& model);

struct SimResult {
  std::vector<Event> events;
  std::vector<TrajectorySample> trajectory;
  nlohmann::json summary;
};

/// Full deterministic run. Requires a connected initial graph.
SimResult run(const ScenarioConfig& config);

std::string trajectory_csv(const SimResult& result);
std::string events_jsonl(const SimResult& result);

bool has_event(const SimResult& result, EventKind kind);
std::optional<double> first_event_time(const SimResult& result, EventKind kind);

}  // namespace bicon
