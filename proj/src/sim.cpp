#include "bicon/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "bicon/estimator.hpp"
#include "bicon/io.hpp"
#include "bicon/spectral.hpp"

namespace bicon {

void ScenarioConfig::validate() const {
  model.validate();
  if (positions.empty()) throw ScenarioFormatError("scenario: no positions");
  for (std::size_t i = 0; i < positions.size(); ++i)
    if (!std::isfinite(positions[i].x) || !std::isfinite(positions[i].y))
      throw ScenarioFormatError("scenario: non-finite position " + std::to_string(i));
  if (!(dt > 0.0)) throw ScenarioFormatError("scenario: dt must be positive");
  if (duration < 0.0) throw ScenarioFormatError("scenario: negative duration");
  if (!(epsilon > 0.0)) throw ScenarioFormatError("scenario: epsilon must be positive");
  if (gradient_gain < 0.0) throw ScenarioFormatError("scenario: negative gradient gain");
  if (!(max_speed > 0.0)) throw ScenarioFormatError("scenario: max_speed must be positive");
  if (!(estimator_gain > 0.0))
    throw ScenarioFormatError("scenario: estimator gain must be positive");
  if (max_gradient_moves < 1)
    throw ScenarioFormatError("scenario: max_gradient_moves must be positive");
}

namespace {

using SectionMap = std::map<std::string, std::map<std::string, std::string>>;

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

SectionMap parse_sections(const std::string& text) {
  SectionMap out;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ScenarioFormatError("scenario line " + std::to_string(lineno) +
                                  ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      out[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ScenarioFormatError("scenario line " + std::to_string(lineno) +
                                ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ScenarioFormatError("scenario line " + std::to_string(lineno) +
                                ": empty key or value");
    out[section][key] = value;
  }
  return out;
}

double parse_num(const std::string& v, const std::string& what) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ScenarioFormatError("scenario: bad number for " + what + ": '" + v + "'");
  }
}

bool parse_bool(const std::string& v, const std::string& what) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ScenarioFormatError("scenario: bad boolean for " + what + ": '" + v + "'");
}

}  // namespace

std::vector<Position> dumbbell_layout(std::uint64_t seed, double jitter) {
  // Two clusters (4 and 3 robots) plus one apex bridge above the gap.
  // The bridge chain carries the only articulation points, so pure
  // consensus tears it while the enforced run glues it long enough to
  // pull the clusters into direct contact.
  static constexpr double base[8][2] = {
      {-0.2480, 0.0132}, {-0.3768, 0.1752}, {-0.5225, 0.0033}, {-0.4168, -0.1733},
      {0.3214, -0.0206}, {0.4790, -0.0742}, {0.4154, 0.1215},  {0.0344, 0.4340},
  };
  std::uint64_t state = mix_seed(seed);
  std::vector<Position> out(8);
  for (int i = 0; i < 8; ++i) {
    out[i].x = base[i][0] + jitter * uniform_pm1(state);
    out[i].y = base[i][1] + jitter * uniform_pm1(state);
  }
  return out;
}

ScenarioConfig parse_scenario(const std::string& text) {
  const SectionMap sections = parse_sections(text);
  ScenarioConfig config;

  for (const auto& [section, entries] : sections) {
    if (section == "model") {
      for (const auto& [k, v] : entries) {
        if (k == "radius") config.model.radius = parse_num(v, "model.radius");
        else if (k == "sigma") config.model.sigma = parse_num(v, "model.sigma");
        else throw ScenarioFormatError("scenario: unknown key model." + k);
      }
    } else if (section == "run") {
      for (const auto& [k, v] : entries) {
        if (k == "dt") config.dt = parse_num(v, "run.dt");
        else if (k == "duration") config.duration = parse_num(v, "run.duration");
        else if (k == "seed") config.seed = static_cast<std::uint64_t>(parse_num(v, "run.seed"));
        else if (k == "epsilon") config.epsilon = parse_num(v, "run.epsilon");
        else throw ScenarioFormatError("scenario: unknown key run." + k);
      }
    } else if (section == "controller") {
      for (const auto& [k, v] : entries) {
        if (k == "consensus") config.consensus = parse_bool(v, "controller.consensus");
        else if (k == "enforcement") config.enforcement = parse_bool(v, "controller.enforcement");
        else if (k == "gradient_gain") config.gradient_gain = parse_num(v, "controller.gradient_gain");
        else if (k == "max_speed") config.max_speed = parse_num(v, "controller.max_speed");
        else if (k == "max_gradient_moves")
          config.max_gradient_moves = static_cast<long>(parse_num(v, "controller.max_gradient_moves"));
        else throw ScenarioFormatError("scenario: unknown key controller." + k);
      }
    } else if (section == "estimator") {
      for (const auto& [k, v] : entries) {
        if (k == "gain") config.estimator_gain = parse_num(v, "estimator.gain");
        else if (k == "method") {
          if (v == "exact") config.estimator_method = EigenvectorMethod::Exact;
          else if (v == "consensus") config.estimator_method = EigenvectorMethod::Consensus;
          else throw ScenarioFormatError("scenario: estimator.method must be exact|consensus");
        } else throw ScenarioFormatError("scenario: unknown key estimator." + k);
      }
    } else if (section == "positions" || section == "layout") {
      // handled below
    } else if (!section.empty()) {
      throw ScenarioFormatError("scenario: unknown section [" + section + "]");
    } else if (!entries.empty()) {
      throw ScenarioFormatError("scenario: keys outside any section");
    }
  }

  const bool has_positions =
      sections.count("positions") && !sections.at("positions").empty();
  const bool has_layout = sections.count("layout") && !sections.at("layout").empty();
  if (has_positions == has_layout)
    throw ScenarioFormatError("scenario: need exactly one of [positions] or [layout]");

  if (has_positions) {
    std::map<int, Position> by_index;
    for (const auto& [k, v] : sections.at("positions")) {
      int idx = 0;
      try {
        std::size_t used = 0;
        idx = std::stoi(k, &used);
        if (used != k.size()) throw std::invalid_argument(k);
      } catch (const std::exception&) {
        throw ScenarioFormatError("scenario: bad position index '" + k + "'");
      }
      std::istringstream pair(v);
      double x = 0.0, y = 0.0;
      if (!(pair >> x >> y))
        throw ScenarioFormatError("scenario: position " + k + " needs 'x y'");
      std::string rest;
      if (pair >> rest)
        throw ScenarioFormatError("scenario: position " + k + " has trailing tokens");
      by_index[idx] = Position{x, y};
    }
    int expect = 0;
    for (const auto& [idx, p] : by_index) {
      if (idx != expect)
        throw ScenarioFormatError("scenario: position indices must be 0..n-1 without gaps");
      ++expect;
      config.positions.push_back(p);
    }
  } else {
    std::string type;
    std::uint64_t seed = 0;
    double jitter = 0.0;
    for (const auto& [k, v] : sections.at("layout")) {
      if (k == "type") type = v;
      else if (k == "seed") seed = static_cast<std::uint64_t>(parse_num(v, "layout.seed"));
      else if (k == "jitter") jitter = parse_num(v, "layout.jitter");
      else throw ScenarioFormatError("scenario: unknown key layout." + k);
    }
    if (type != "dumbbell")
      throw ScenarioFormatError("scenario: unknown layout type '" + type + "'");
    config.positions = dumbbell_layout(seed, jitter);
  }

  config.validate();
  return config;
}

ScenarioConfig load_scenario_file(const std::string& path) {
  return parse_scenario(read_file(path));
}

std::string to_scenario_text(const ScenarioConfig& config) {
  std::ostringstream out;
  out << "[model]\n";
  out << "radius = " << format_double(config.model.radius) << "\n";
  out << "sigma = " << format_double(config.model.sigma) << "\n\n";
  out << "[run]\n";
  out << "dt = " << format_double(config.dt) << "\n";
  out << "duration = " << format_double(config.duration) << "\n";
  out << "seed = " << config.seed << "\n";
  out << "epsilon = " << format_double(config.epsilon) << "\n\n";
  out << "[controller]\n";
  out << "consensus = " << (config.consensus ? "true" : "false") << "\n";
  out << "enforcement = " << (config.enforcement ? "true" : "false") << "\n";
  out << "gradient_gain = " << format_double(config.gradient_gain) << "\n";
  out << "max_speed = " << format_double(config.max_speed) << "\n";
  out << "max_gradient_moves = " << config.max_gradient_moves << "\n\n";
  out << "[estimator]\n";
  out << "method = "
      << (config.estimator_method == EigenvectorMethod::Exact ? "exact" : "consensus") << "\n";
  out << "gain = " << format_double(config.estimator_gain) << "\n\n";
  out << "[positions]\n";
  for (std::size_t i = 0; i < config.positions.size(); ++i)
    out << i << " = " << format_double(config.positions[i].x) << " "
        << format_double(config.positions[i].y) << "\n";
  return out.str();
}

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::GraphChanged: return "GraphChanged";
    case EventKind::ConnectivityLost: return "ConnectivityLost";
    case EventKind::BiconnectivityAchieved: return "BiconnectivityAchieved";
    case EventKind::CheckVerdict: return "CheckVerdict";
    case EventKind::EstimationCompleted: return "EstimationCompleted";
    case EventKind::EnforcementNonTermination: return "EnforcementNonTermination";
  }
  return "?";
}

World make_world(const std::vector<Position>& positions, const CommModel& model) {
  World w;
  w.positions = positions;
  w.graph = build_adjacency(positions, model);
  w.time = 0.0;
  return w;
}

World step(const World& world, std::span<const Eigen::Vector2d> velocities, double dt,
           const CommModel& model) {
  if (velocities.size() != world.positions.size())
    throw std::invalid_argument("step: velocity count mismatch");
  World next;
  next.positions.resize(world.positions.size());
  for (std::size_t i = 0; i < world.positions.size(); ++i) {
    const Eigen::Vector2d& u = velocities[i];
    if (!std::isfinite(u.x()) || !std::isfinite(u.y()))
      throw std::runtime_error("step: non-finite velocity for agent " + std::to_string(i));
    next.positions[i].x = world.positions[i].x + dt * u.x();
    next.positions[i].y = world.positions[i].y + dt * u.y();
  }
  next.graph = build_adjacency(next.positions, model);
  next.time = world.time + dt;
  return next;
}

namespace {

std::set<std::pair<int, int>> edge_set(const WeightedGraph& g) {
  std::set<std::pair<int, int>> out;
  for (int i = 0; i < g.size(); ++i)
    for (int j = i + 1; j < g.size(); ++j)
      if (g.weight(i, j) > kEdgeWeightFloor) out.insert({i, j});
  return out;
}

TrajectorySample sample_world(const World& w) {
  TrajectorySample s;
  s.t = w.time;
  s.positions = w.positions;
  const int n = w.graph.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (n >= 2) {
    const EigenDecomposition ed = eigendecompose(laplacian(w.graph));
    s.lambda2 = ed.values[1];
    s.lambda3 = n >= 3 ? ed.values[2] : nan;
  } else {
    s.lambda2 = nan;
    s.lambda3 = nan;
  }
  s.biconnected = classify_biconnectivity(w.graph) == BiconnectivityStatus::Biconnected;
  return s;
}

}  // namespace

SimResult run(const ScenarioConfig& config) {
  config.validate();
  World world = make_world(config.positions, config.model);
  const int n = world.graph.size();
  if (!is_connected(world.graph))
    throw std::domain_error("run: initial graph is not connected");

  SimResult result;
  result.trajectory.push_back(sample_world(world));

  ExactEigenvalueProvider provider;
  std::vector<AgentEnforcementState> agents(n);
  std::vector<char> non_termination_reported(n, 0);
  for (int i = 0; i < n; ++i) agents[i].agent = i;

  bool was_connected = true;
  bool was_biconnected = result.trajectory.front().biconnected;
  std::set<std::pair<int, int>> prev_edges = edge_set(world.graph);

  const long ticks = static_cast<long>(std::ceil(config.duration / config.dt - 1e-12));
  std::vector<Eigen::Vector2d> velocities(n, Eigen::Vector2d::Zero());

  for (long tick = 0; tick < ticks; ++tick) {
    const double t0 = world.time;
    for (auto& u : velocities) u.setZero();

    if (config.consensus)
      for (int i = 0; i < n; ++i)
        velocities[i] += consensus_control(i, world.positions, world.graph);

    if (config.enforcement) {
      EnforcementContext ctx;
      ctx.positions = &world.positions;
      ctx.graph = &world.graph;
      ctx.model = config.model;
      ctx.epsilon = config.epsilon;
      ctx.provider = &provider;
      ctx.method = config.estimator_method;
      ctx.estimator_gain = config.estimator_gain;
      ctx.gradient_gain = config.gradient_gain;
      ctx.max_speed = config.max_speed;
      ctx.max_gradient_moves = config.max_gradient_moves;

      for (int i = 0; i < n; ++i) {
        AgentEnforcementState& st = agents[i];
        // Positions moved since the last tick, so any Stop verdict is
        // stale: restart the loop at the local test.
        st.phase = EnforcementPhase::CheckLocal;
        ctx.estimator_seed = mix_seed(config.seed ^ (static_cast<std::uint64_t>(tick) << 20) ^
                                      static_cast<std::uint64_t>(i));
        for (int guard = 0; guard < 8; ++guard) {
          const StepOutcome outcome = enforcement_step(st, ctx);
          if (outcome.verdict) {
            const BiconnectivityVerdict& v = *outcome.verdict;
            result.events.push_back(
                {t0, EventKind::CheckVerdict,
                 nlohmann::json{{"agent", v.focal},
                                {"epsilon", v.epsilon},
                                {"lambda3", v.lambda3 ? nlohmann::json(*v.lambda3)
                                                      : nlohmann::json()},
                                {"bound", v.bound ? nlohmann::json(*v.bound) : nlohmann::json()},
                                {"passed", v.passed},
                                {"locally_biconnected", v.locally_biconnected}}});
          }
          if (outcome.estimation) {
            const EstimationInfo& e = *outcome.estimation;
            result.events.push_back(
                {t0, EventKind::EstimationCompleted,
                 nlohmann::json{{"agent", i},
                                {"method", e.method == EigenvectorMethod::Exact ? "exact"
                                                                                : "consensus"},
                                {"sim_time", e.sim_time},
                                {"steps", e.steps},
                                {"converged", e.converged},
                                {"max_angle", e.max_angle}}});
          }
          if (!outcome.error.empty()) break;  // fail safe: hold this tick
          if (outcome.phase == EnforcementPhase::Done) break;
          if (outcome.phase == EnforcementPhase::CheckLocal) {  // completed a gradient move
            velocities[i] += outcome.velocity;
            break;
          }
        }
        if (st.non_terminated && !non_termination_reported[i]) {
          non_termination_reported[i] = 1;
          result.events.push_back({t0, EventKind::EnforcementNonTermination,
                                   nlohmann::json{{"agent", i},
                                                  {"gradient_moves", st.gradient_moves}}});
        }
      }
    }

    world = step(world, velocities, config.dt, config.model);

    const std::set<std::pair<int, int>> edges = edge_set(world.graph);
    if (edges != prev_edges) {
      nlohmann::json added = nlohmann::json::array();
      nlohmann::json removed = nlohmann::json::array();
      for (const auto& e : edges)
        if (!prev_edges.count(e)) added.push_back({e.first, e.second});
      for (const auto& e : prev_edges)
        if (!edges.count(e)) removed.push_back({e.first, e.second});
      result.events.push_back({world.time, EventKind::GraphChanged,
                               nlohmann::json{{"added", added}, {"removed", removed}}});
      prev_edges = edges;
    }

    const TrajectorySample s = sample_world(world);
    const bool connected_now = is_connected(world.graph);
    if (was_connected && !connected_now)
      result.events.push_back({world.time, EventKind::ConnectivityLost, nlohmann::json::object()});
    if (!was_biconnected && s.biconnected)
      result.events.push_back(
          {world.time, EventKind::BiconnectivityAchieved, nlohmann::json::object()});
    was_connected = connected_now;
    was_biconnected = s.biconnected;
    result.trajectory.push_back(s);
  }

  std::map<std::string, int> counts;
  for (const Event& e : result.events) ++counts[to_string(e.kind)];
  const TrajectorySample& first = result.trajectory.front();
  const TrajectorySample& last = result.trajectory.back();
  result.summary = nlohmann::json{
      {"nodes", n},
      {"ticks", ticks},
      {"dt", config.dt},
      {"duration", config.duration},
      {"seed", config.seed},
      {"consensus", config.consensus},
      {"enforcement", config.enforcement},
      {"initial", {{"lambda2", first.lambda2}, {"lambda3", first.lambda3},
                   {"biconnected", first.biconnected}}},
      {"final", {{"lambda2", last.lambda2}, {"lambda3", last.lambda3},
                 {"biconnected", last.biconnected},
                 {"connected", is_connected(world.graph)}}},
      {"event_counts", counts},
  };
  const auto lost = first_event_time(result, EventKind::ConnectivityLost);
  const auto bic = first_event_time(result, EventKind::BiconnectivityAchieved);
  result.summary["first_connectivity_lost"] = lost ? nlohmann::json(*lost) : nlohmann::json();
  result.summary["first_biconnectivity_achieved"] = bic ? nlohmann::json(*bic) : nlohmann::json();
  return result;
}

std::string trajectory_csv(const SimResult& result) {
  std::ostringstream out;
  out << "t,agent,x,y,lambda2,lambda3,biconnected\n";
  for (const TrajectorySample& s : result.trajectory) {
    for (std::size_t i = 0; i < s.positions.size(); ++i) {
      out << format_double(s.t) << ',' << i << ',' << format_double(s.positions[i].x) << ','
          << format_double(s.positions[i].y) << ',' << format_double(s.lambda2) << ','
          << format_double(s.lambda3) << ',' << (s.biconnected ? 1 : 0) << '\n';
    }
  }
  return out.str();
}

std::string events_jsonl(const SimResult& result) {
  std::ostringstream out;
  for (const Event& e : result.events) {
    nlohmann::json line{{"t", e.t}, {"kind", to_string(e.kind)}, {"payload", e.payload}};
    out << line.dump() << '\n';
  }
  return out.str();
}

bool has_event(const SimResult& result, EventKind kind) {
  return first_event_time(result, kind).has_value();
}

std::optional<double> first_event_time(const SimResult& result, EventKind kind) {
  for (const Event& e : result.events)
    if (e.kind == kind) return e.t;
  return std::nullopt;
}

}  // namespace bicon
