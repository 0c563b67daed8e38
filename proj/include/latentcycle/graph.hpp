#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lc::graph {

enum class VertexKind { observed, latent };

struct Vertex {
    int id = 0;
    std::string label;
    VertexKind kind = VertexKind::observed;
};

using VertexSet = std::vector<int>;
using Edge = std::pair<int, int>;

// Possibly cyclic directed graph. Immutable after construction.
class DirectedGraph {
public:
    DirectedGraph() = default;
    DirectedGraph(std::vector<Vertex> vertices, std::vector<Edge> edges);

    int size() const { return static_cast<int>(vertices_.size()); }
    const std::vector<Vertex>& vertices() const { return vertices_; }
    const Vertex& vertex(int v) const { return vertices_.at(v); }
    const std::string& label(int v) const { return vertices_.at(v).label; }
    bool is_latent(int v) const { return vertices_.at(v).kind == VertexKind::latent; }
    const std::vector<Edge>& edges() const { return edges_; }
    bool has_edge(int u, int v) const { return adj_[u * size() + v] != 0; }
    bool adjacent(int u, int v) const { return has_edge(u, v) || has_edge(v, u); }
    const std::vector<int>& parents(int v) const { return parents_.at(v); }
    const std::vector<int>& children(int v) const { return children_.at(v); }

    std::vector<int> observed() const;
    std::vector<int> latents() const;
    int find(const std::string& label) const;  // -1 if absent
    int index_of(const std::string& label) const;  // throws
    VertexSet resolve(const std::vector<std::string>& labels) const;

    // vertices with a directed path (length >= 0) into `targets`, avoiding `blocked`
    std::vector<char> ancestors_avoiding(const VertexSet& targets, const std::vector<char>& blocked) const;
    std::vector<char> descendants_of(int v) const;

private:
    std::vector<Vertex> vertices_;
    std::vector<Edge> edges_;
    std::vector<std::vector<int>> parents_, children_;
    std::vector<char> adj_;
};

struct Trek {
    int top = -1;
    std::vector<int> side_a;  // top first, ends at the A endpoint
    std::vector<int> side_b;
    bool simple = false;      // sides meet only at the top
};

struct KTrek {
    int top = -1;
    std::vector<std::vector<int>> sides;
};

struct Triangle {
    int x = -1, y = -1, z = -1;
    bool collider_at_y = false;
};

bool is_acyclic(const DirectedGraph& g);
std::vector<int> topological_order(const DirectedGraph& g);  // throws on cycles

bool d_separated(const DirectedGraph& g, const VertexSet& A, const VertexSet& B, const VertexSet& C);

// every directed simple path from u to v (u == v gives the single trivial path)
std::vector<std::vector<int>> directed_simple_paths(const DirectedGraph& g, int u, int v, int max_edges = -1);

std::vector<Trek> enumerate_simple_treks(const DirectedGraph& g, int x, int y);

bool t_separates(const DirectedGraph& g, const VertexSet& CA, const VertexSet& CB, const VertexSet& A,
                 const VertexSet& B);

struct SearchLimits {
    int max_vertices = 14;
};

// exhaustive subset search; nullopt when no choke pair of total size <= bound exists
std::optional<int> min_tsep_size(const DirectedGraph& g, const VertexSet& A, const VertexSet& B, int bound,
                                 const SearchLimits& limits = {});

// same quantity via a vertex-split max-flow on the trek network
int min_choke_size(const DirectedGraph& g, const VertexSet& A, const VertexSet& B);
// smallest C_B with (empty, C_B) t-separating A and B
int min_one_sided_choke(const DirectedGraph& g, const VertexSet& A, const VertexSet& B);

bool every_ktrek_system_has_sided_intersection(const DirectedGraph& g, const std::vector<VertexSet>& S,
                                               int len_cap, const SearchLimits& limits = {});

std::vector<Triangle> find_triangles(const DirectedGraph& g);

DirectedGraph random_dag(int p, double expected_neighborhood_size, std::uint64_t seed);

}  // namespace lc::graph
