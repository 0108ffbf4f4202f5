#pragma once

#include <string>
#include <vector>

#include "bicon/graph.hpp"

namespace bicon {

/// Shortest representation that round-trips a double exactly.
std::string format_double(double v);

/// Edge-list text: optional "# nodes N" header, then one "i j weight"
/// triple per line (0-based). Comments start with '#'.
WeightedGraph parse_edge_list(const std::string& text);
WeightedGraph load_edge_list(const std::string& path);
std::string to_edge_list(const WeightedGraph& g);
void save_edge_list(const WeightedGraph& g, const std::string& path);

/// Position list: one "x y" pair per line, '#' comments.
std::vector<Position> parse_positions(const std::string& text);
std::vector<Position> load_positions(const std::string& path);
std::string to_position_list(const std::vector<Position>& positions);
void save_positions(const std::vector<Position>& positions, const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace bicon
