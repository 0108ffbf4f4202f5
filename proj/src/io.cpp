#include "bicon/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bicon {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

// Strips comments, returns nonempty payload lines.
std::vector<std::string> payload_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    const auto b = line.find_last_not_of(" \t\r");
    out.push_back(line.substr(a, b - a + 1));
  }
  return out;
}

}  // namespace

WeightedGraph parse_edge_list(const std::string& text) {
  int declared_nodes = -1;
  {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      const auto pos = line.find("# nodes");
      if (pos != std::string::npos) {
        std::istringstream rest(line.substr(pos + 7));
        rest >> declared_nodes;
        break;
      }
    }
  }

  struct Edge {
    int i, j;
    double w;
  };
  std::vector<Edge> edges;
  int max_node = -1;
  for (const std::string& line : payload_lines(text)) {
    std::istringstream row(line);
    Edge e{};
    if (!(row >> e.i >> e.j >> e.w))
      throw std::invalid_argument("edge list: expected 'i j weight', got '" + line + "'");
    std::string rest;
    if (row >> rest)
      throw std::invalid_argument("edge list: trailing tokens in '" + line + "'");
    if (e.i < 0 || e.j < 0) throw std::invalid_argument("edge list: negative node index");
    max_node = std::max(max_node, std::max(e.i, e.j));
    edges.push_back(e);
  }
  const int n = std::max(declared_nodes, max_node + 1);
  if (n <= 0) throw std::invalid_argument("edge list: no nodes");
  WeightedGraph g(n);
  for (const Edge& e : edges) g.set_weight(e.i, e.j, e.w);
  return g;
}

WeightedGraph load_edge_list(const std::string& path) {
  return parse_edge_list(read_file(path));
}

std::string to_edge_list(const WeightedGraph& g) {
  std::ostringstream out;
  out << "# nodes " << g.size() << "\n";
  for (int i = 0; i < g.size(); ++i)
    for (int j = i + 1; j < g.size(); ++j)
      if (g.weight(i, j) > 0.0)
        out << i << ' ' << j << ' ' << format_double(g.weight(i, j)) << '\n';
  return out.str();
}

void save_edge_list(const WeightedGraph& g, const std::string& path) {
  write_file(path, to_edge_list(g));
}

std::vector<Position> parse_positions(const std::string& text) {
  std::vector<Position> out;
  for (const std::string& line : payload_lines(text)) {
    std::istringstream row(line);
    Position p;
    if (!(row >> p.x >> p.y))
      throw std::invalid_argument("positions: expected 'x y', got '" + line + "'");
    std::string rest;
    if (row >> rest) throw std::invalid_argument("positions: trailing tokens in '" + line + "'");
    out.push_back(p);
  }
  return out;
}

std::vector<Position> load_positions(const std::string& path) {
  return parse_positions(read_file(path));
}

std::string to_position_list(const std::vector<Position>& positions) {
  std::ostringstream out;
  for (const Position& p : positions)
    out << format_double(p.x) << ' ' << format_double(p.y) << '\n';
  return out.str();
}

void save_positions(const std::vector<Position>& positions, const std::string& path) {
  write_file(path, to_position_list(positions));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

}  // namespace bicon
