#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "bicon/controller.hpp"
#include "bicon/estimator.hpp"
#include "bicon/graph.hpp"
#include "bicon/io.hpp"
#include "bicon/sim.hpp"
#include "bicon/spectral.hpp"

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// All numeric console output goes through here: 12 significant digits.
std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

struct GraphInputOptions {
  std::string path;
  bool as_positions = false;
  double radius = 0.5;
  double sigma = 0.125;
};

bicon::WeightedGraph load_graph(const GraphInputOptions& opts) {
  if (opts.as_positions) {
    const auto positions = bicon::load_positions(opts.path);
    return bicon::build_adjacency(positions, bicon::CommModel{opts.radius, opts.sigma});
  }
  return bicon::load_edge_list(opts.path);
}

void add_graph_input(CLI::App* cmd, GraphInputOptions& opts) {
  cmd->add_option("graph", opts.path, "graph file (edge list, or positions with --positions)")
      ->required();
  cmd->add_flag("--positions", opts.as_positions,
                "interpret the file as 'x y' positions and build the R-disk graph");
  cmd->add_option("--radius", opts.radius, "R-disk radius (with --positions)");
  cmd->add_option("--sigma", opts.sigma, "Gaussian weight scale (with --positions)");
}

fs::path prepare_out_dir(const std::string& out) {
  fs::path dir(out);
  fs::create_directories(dir);
  return dir;
}

int cmd_run(const std::string& scenario_path, const std::string& out_dir) {
  bicon::ScenarioConfig config = bicon::load_scenario_file(scenario_path);
  if (const char* env_seed = std::getenv("BICON_SEED")) {
    config.seed = std::strtoull(env_seed, nullptr, 10);
  }
  const bicon::SimResult result = bicon::run(config);

  const fs::path dir = prepare_out_dir(out_dir);
  bicon::write_file((dir / "config.ini").string(), bicon::to_scenario_text(config));
  bicon::write_file((dir / "trajectory.csv").string(), bicon::trajectory_csv(result));
  bicon::write_file((dir / "events.jsonl").string(), bicon::events_jsonl(result));
  bicon::write_file((dir / "summary.json").string(), result.summary.dump(2) + "\n");

  const auto& last = result.trajectory.back();
  std::printf("run: %zu ticks, %zu events, final lambda2=%s lambda3=%s biconnected=%s -> %s\n",
              result.trajectory.size() - 1, result.events.size(), num(last.lambda2).c_str(),
              num(last.lambda3).c_str(), last.biconnected ? "true" : "false",
              dir.string().c_str());
  return 0;
}

int cmd_estimate(const GraphInputOptions& graph_opts, int eigen_index, double gain,
                 std::uint64_t seed, const std::string& out_dir, bool dump_trajectory) {
  const bicon::WeightedGraph g = load_graph(graph_opts);
  if (eigen_index < 1 || eigen_index > g.size()) {
    std::fprintf(stderr, "error: --eigen-index must be in [1, %d]\n", g.size());
    return 1;
  }
  bicon::ExactEigenvalueProvider provider;
  const Eigen::MatrixXd lap = bicon::laplacian(g);
  const double lambda = provider.kth_smallest(lap, eigen_index);

  bicon::EstimatorReport report;
  const Eigen::VectorXd estimate =
      bicon::estimate_eigenvector(g, lambda, gain, seed, {}, &report);

  std::printf("estimate: lambda_%d=%s, max angle to reference %s rad after t=%s (%ld steps)\n",
              eigen_index, num(lambda).c_str(), num(report.max_angle).c_str(),
              num(report.convergence_time).c_str(), report.steps);
  for (int i = 0; i < g.size(); ++i) std::printf("  v[%d] = %s\n", i, num(estimate[i]).c_str());

  if (!out_dir.empty()) {
    const fs::path dir = prepare_out_dir(out_dir);
    json summary{{"eigen_index", eigen_index},
                 {"lambda", lambda},
                 {"gain", gain},
                 {"seed", seed},
                 {"max_angle", report.max_angle},
                 {"converged", report.converged},
                 {"time_to_threshold", report.time_to_threshold},
                 {"convergence_time", report.convergence_time},
                 {"steps", report.steps},
                 {"step_size", report.step_size},
                 {"tie_fallback", report.tie_fallback},
                 {"estimate", std::vector<double>(estimate.data(), estimate.data() + estimate.size())}};
    bicon::write_file((dir / "estimate.json").string(), summary.dump(2) + "\n");

    if (dump_trajectory) {
      // Re-run with per-step recording: cheap enough at CLI scale.
      const bicon::ShiftedLaplacian sl = bicon::build_shifted(lap, lambda);
      const double h = bicon::default_step_size(g, gain);
      std::uint64_t state = bicon::mix_seed(seed);
      bicon::EstimatorState st;
      st.gain = gain;
      const int n = g.size();
      Eigen::VectorXd flat(n * n);
      for (Eigen::Index q = 0; q < flat.size(); ++q) flat[q] = bicon::uniform_pm1(state);
      st.z.assign(n, Eigen::VectorXd(n));
      for (int i = 0; i < n; ++i) st.z[i] = flat.segment(i * n, n);

      std::string csv = "t,agent,component,value\n";
      bicon::IntegrateOptions iopts;
      iopts.stop_alignment_tol = -1.0;
      const int chunks = 200;
      const double chunk_t = report.convergence_time / chunks;
      double t = 0.0;
      for (int c = 0; c <= chunks; ++c) {
        for (int i = 0; i < n; ++i)
          for (int comp = 0; comp < n; ++comp)
            csv += bicon::format_double(t) + "," + std::to_string(i) + "," +
                   std::to_string(comp) + "," + bicon::format_double(st.z[i][comp]) + "\n";
        if (c == chunks) break;
        const bicon::EstimatorReport r = bicon::integrate(st, sl, g, chunk_t, h, iopts);
        st = r.final_state;
        t = st.time;
      }
      bicon::write_file((dir / "estimate_trajectory.csv").string(), csv);
    }
  }
  return 0;
}

int cmd_check(const GraphInputOptions& graph_opts, double epsilon, const std::string& out_dir) {
  const bicon::WeightedGraph g = load_graph(graph_opts);
  bicon::ExactEigenvalueProvider provider;

  json verdicts = json::array();
  int passed = 0, tested = 0, skipped = 0;
  for (int i = 0; i < g.size(); ++i) {
    const bicon::BiconnectivityVerdict v =
        bicon::check_biconnectivity_condition(g, i, epsilon, provider);
    if (v.locally_biconnected) {
      ++skipped;
      std::printf("node %d: locally biconnected, spectral test skipped\n", i);
    } else {
      ++tested;
      if (v.passed) ++passed;
      std::printf("node %d: lambda3=%s bound=%s -> %s\n", i, num(*v.lambda3).c_str(),
                  num(*v.bound).c_str(), v.passed ? "pass" : "fail");
    }
    verdicts.push_back(json{{"focal", v.focal},
                            {"epsilon", v.epsilon},
                            {"lambda3", v.lambda3 ? json(*v.lambda3) : json()},
                            {"bound", v.bound ? json(*v.bound) : json()},
                            {"passed", v.passed},
                            {"locally_biconnected", v.locally_biconnected}});
  }
  const bool all_passed = passed == tested;
  std::printf("check: %d locally biconnected, %d tested, %d passed -> %s\n", skipped, tested,
              passed, all_passed ? "all nodes certified" : "certification incomplete");
  if (!out_dir.empty()) {
    const fs::path dir = prepare_out_dir(out_dir);
    bicon::write_file((dir / "verdicts.json").string(),
                      json{{"epsilon", epsilon}, {"verdicts", verdicts}}.dump(2) + "\n");
  }
  return 0;
}

int cmd_analyze(const GraphInputOptions& graph_opts, const std::string& out_dir) {
  const bicon::WeightedGraph g = load_graph(graph_opts);
  const bicon::EigenDecomposition ed = bicon::eigendecompose(bicon::laplacian(g));
  const bicon::BiconnectivityStatus status = bicon::classify_biconnectivity(g);

  std::string arts = "{";
  if (bicon::is_connected(g)) {
    bool first = true;
    for (int a : bicon::articulation_points(g)) {
      if (!first) arts += ", ";
      arts += std::to_string(a);
      first = false;
    }
  }
  arts += "}";

  const double l2 = g.size() >= 2 ? ed.values[1] : 0.0;
  const double l3 = g.size() >= 3 ? ed.values[2] : 0.0;
  std::printf("biconnected: %s, lambda2=%s, lambda3=%s\n",
              status == bicon::BiconnectivityStatus::Biconnected ? "true" : "false",
              num(l2).c_str(), num(l3).c_str());
  std::printf("status: %s\n", bicon::to_string(status));
  std::printf("articulation points: %s\n", arts.c_str());
  std::printf("spectrum:");
  for (Eigen::Index k = 0; k < ed.values.size(); ++k)
    std::printf(" %s", num(ed.values[k]).c_str());
  std::printf("\n");

  if (!out_dir.empty()) {
    const fs::path dir = prepare_out_dir(out_dir);
    bicon::save_edge_list(g, (dir / "graph.txt").string());
    json out{{"nodes", g.size()},
             {"edges", g.edge_count()},
             {"status", bicon::to_string(status)},
             {"lambda2", l2},
             {"lambda3", l3},
             {"spectrum", std::vector<double>(ed.values.data(), ed.values.data() + ed.values.size())}};
    if (bicon::is_connected(g)) {
      out["articulation_points"] = bicon::articulation_points(g);
    }
    bicon::write_file((dir / "analysis.json").string(), out.dump(2) + "\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-robot biconnectivity toolkit"};
  app.require_subcommand(1);

  // run
  std::string scenario_path, run_out = "out";
  CLI::App* run_cmd = app.add_subcommand("run", "simulate a scenario file");
  run_cmd->add_option("scenario", scenario_path, "scenario file (.ini)")->required();
  run_cmd->add_option("--out", run_out, "output directory");

  // estimate
  GraphInputOptions est_graph;
  int eigen_index = 2;
  double est_gain = 500.0;
  std::uint64_t est_seed = 1;
  std::string est_out;
  bool est_dump = false;
  CLI::App* est_cmd = app.add_subcommand("estimate", "consensus eigenvector estimation");
  add_graph_input(est_cmd, est_graph);
  est_cmd->add_option("--eigen-index", eigen_index, "1-based eigenvalue index")->required();
  est_cmd->add_option("--gain", est_gain, "estimator gain k");
  est_cmd->add_option("--seed", est_seed, "initialization seed");
  est_cmd->add_option("--out", est_out, "output directory");
  est_cmd->add_flag("--dump-trajectory", est_dump, "write per-step state CSV");

  // check
  GraphInputOptions check_graph;
  double epsilon = 0.05;
  std::string check_out;
  CLI::App* check_cmd = app.add_subcommand("check", "spectral biconnectivity test per node");
  add_graph_input(check_cmd, check_graph);
  check_cmd->add_option("--epsilon", epsilon, "perturbation scale");
  check_cmd->add_option("--out", check_out, "output directory");

  // analyze
  GraphInputOptions analyze_graph;
  std::string analyze_out;
  CLI::App* analyze_cmd = app.add_subcommand("analyze", "articulation points and spectrum");
  add_graph_input(analyze_cmd, analyze_graph);
  analyze_cmd->add_option("--out", analyze_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help/version exit 0, usage errors exit 2
  }

  try {
    if (run_cmd->parsed()) return cmd_run(scenario_path, run_out);
    if (est_cmd->parsed())
      return cmd_estimate(est_graph, eigen_index, est_gain, est_seed, est_out, est_dump);
    if (check_cmd->parsed()) return cmd_check(check_graph, epsilon, check_out);
    if (analyze_cmd->parsed()) return cmd_analyze(analyze_graph, analyze_out);
  } catch (const bicon::ScenarioFormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
