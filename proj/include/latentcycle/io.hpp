#pragma once
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "latentcycle/graph.hpp"
#include "latentcycle/sem.hpp"

namespace lc::io {

using json = nlohmann::json;

graph::DirectedGraph graph_from_json(const json& j);
json graph_to_json(const graph::DirectedGraph& g);

// Graph JSON plus "coefficients" (p x p, row = source) and "noise" (list, or one object for every vertex).
// Missing coefficients default to 1 on every edge; missing noise defaults to `fallback_noise`.
sem::LinearSem sem_from_json(const json& j, const sem::NoiseSpec& fallback_noise = sem::NoiseSpec::gaussian(0, 1));
json sem_to_json(const sem::LinearSem& s);
sem::NoiseSpec noise_from_json(const json& j);
json noise_to_json(const sem::NoiseSpec& n);

// optional "sets": {"s1": ["X5","X6"], ...} stored next to a graph
std::map<std::string, graph::VertexSet> named_sets(const json& j, const graph::DirectedGraph& g);

sem::Dataset read_csv(std::istream& in);
sem::Dataset read_csv_file(const std::string& path);
void write_csv(std::ostream& out, const sem::Dataset& d);

std::string read_text(const std::string& path);
json read_json_file(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace lc::io
