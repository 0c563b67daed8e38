#pragma once
#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "latentcycle/graph.hpp"
#include "latentcycle/sem.hpp"

namespace lc::vcsgs {

enum class TripleMark { collider, noncollider, ambiguous };
enum class PairMark { adjacent, apparently_nonadjacent, definitely_nonadjacent };

struct Triple {
    int x = -1, y = -1, z = -1;  // x < z, y adjacent to both
    TripleMark mark = TripleMark::ambiguous;
};

class PatternGraph {
public:
    PatternGraph() = default;
    // complete undirected graph
    explicit PatternGraph(std::vector<std::string> labels);

    int size() const { return static_cast<int>(labels_.size()); }
    const std::vector<std::string>& labels() const { return labels_; }
    bool adjacent(int a, int b) const { return adj_[idx(a, b)] != 0; }
    bool directed(int a, int b) const { return arrow_[idx(a, b)] != 0; }  // a -> b
    bool undirected(int a, int b) const { return adjacent(a, b) && !directed(a, b) && !directed(b, a); }
    void remove_edge(int a, int b);
    // orients a -> b; false if the edge is absent or already points the other way
    bool orient(int a, int b);

    std::vector<Triple>& triples() { return triples_; }
    const std::vector<Triple>& triples() const { return triples_; }
    const Triple* find_triple(int x, int y, int z) const;
    PairMark pair_mark(int a, int b) const;
    void set_definite_nonadjacency(bool v) { definite_ = v; }
    bool definite_nonadjacency() const { return definite_; }
    // number of times an orientation conflicted with an earlier one
    int conflicts = 0;

private:
    std::size_t idx(int a, int b) const { return static_cast<std::size_t>(a) * labels_.size() + b; }
    std::vector<std::string> labels_;
    std::vector<char> adj_, arrow_;
    std::vector<Triple> triples_;
    bool definite_ = false;
};

class CiTester {
public:
    virtual ~CiTester() = default;
    virtual int size() const = 0;
    virtual std::vector<std::string> labels() const = 0;
    // cached; i != j, S excludes both
    bool independent(int i, int j, const std::vector<int>& S);
    std::size_t queries() const { return cache_.size(); }

protected:
    virtual bool test(int i, int j, const std::vector<int>& S) = 0;

private:
    std::unordered_map<std::uint64_t, bool> cache_;
};

std::unique_ptr<CiTester> fisher_tester(const sem::Dataset& data, double alpha);
std::unique_ptr<CiTester> nonparam_tester(const sem::Dataset& data, double alpha, int n_perm, std::uint64_t seed);
std::unique_ptr<CiTester> oracle_tester(const graph::DirectedGraph& truth);

struct VcsgsOptions {
    int max_vertices = 12;
    std::size_t max_extensions = 100000;
};

PatternGraph run_vcsgs(CiTester& ci, const VcsgsOptions& opt = {});

// skeleton and orientations of a DAG (no marks), used for hand-oriented inputs
PatternGraph pattern_from_dag(const graph::DirectedGraph& g);

nlohmann::json pattern_to_json(const PatternGraph& h);

struct ErrorKinds {
    bool kind1 = false;  // extra adjacency
    bool kind2 = false;  // marked noncollider that is a collider in truth
    bool kind3 = false;  // wrong orientation
    int missing_edges = 0;
    bool any() const { return kind1 || kind2 || kind3; }
};
ErrorKinds classify_errors(const PatternGraph& h, const graph::DirectedGraph& truth);

// ---- edge estimation ----

struct DensityTable {
    int y = -1;
    bool unknown = true;
    std::string reason;
    std::vector<int> parents;
    std::vector<int> bins;  // axis 0 is y, then parents
    // p(y | parent cell) on the rescaled unit cube, row-major with y as the slowest axis
    std::vector<double> density;
    std::vector<char> known_config;  // per parent cell

    std::size_t parent_cells() const;
};

struct EstimatedModel {
    std::vector<std::string> labels;
    std::vector<double> lo, hi;  // per column range used for rescaling
    std::vector<DensityTable> tables;
};

EstimatedModel edge_estimation(const sem::Dataset& data, const PatternGraph& h, double L);
// tables holding the true bin-averaged conditional densities of an acyclic SEM on the same grids
EstimatedModel exact_model(const sem::LinearSem& truth, const EstimatedModel& grid);
double conditional_probability_distance(const EstimatedModel& m1, const sem::LinearSem& m2);
double conditional_probability_distance(const EstimatedModel& m1, const EstimatedModel& m2);

nlohmann::json model_to_json(const EstimatedModel& m);

}  // namespace lc::vcsgs
