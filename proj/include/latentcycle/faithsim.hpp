#pragma once
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "latentcycle/sem.hpp"

namespace lc::faith {

// |rho| at or below this is a round-off zero, never a violation
inline constexpr double kZeroFloor = 1e-5;

struct TriangleEdge {
    int x = -1, z = -1;        // endpoints, x < z
    double strength = 0.0;     // |coefficient|
    double min_ratio = std::numeric_limits<double>::infinity();      // floored
    double min_ratio_raw = std::numeric_limits<double>::infinity();  // unfloored
};

// Every partial correlation of a SEM, computed from the exact covariance.
struct FaithfulnessSummary {
    int triangles = 0;
    // smallest |rho(i,j|S)| above the floor among d-connected triples (inf if none)
    double sf_min = std::numeric_limits<double>::infinity();
    double ktf_min = std::numeric_limits<double>::infinity();      // floored ratio
    double ktf_min_raw = std::numeric_limits<double>::infinity();  // max satisfiable k
    std::vector<TriangleEdge> edges;
};

struct FaithLimits {
    int max_vertices = 10;
};

FaithfulnessSummary summarize(const sem::LinearSem& sem, const FaithLimits& limits = {});

bool strong_faithfulness_violated(const sem::LinearSem& sem, double lambda);
bool ktf_violated(const sem::LinearSem& sem, double k);
// +inf when the graph has no triangle
double max_satisfiable_k(const sem::LinearSem& sem);

// random DAG with U[-1,1] coefficients and unit Gaussian noise, as used by the sweeps
sem::LinearSem random_linear_gaussian(int p, double nb, std::uint64_t seed, double noise_var = 1.0);

struct SweepRow {
    int p = 0;
    double nb = 0.0;
    double threshold = 0.0;
    std::string assumption;  // "strong" or "k_triangle"
    double proportion = 0.0;
    double stderr_ = 0.0;
    int n_graphs = 0;
};

struct SweepConfig {
    std::vector<int> nodes{3, 5, 10};
    std::vector<double> nb_sizes{2, 3, 4, 5, 6, 7, 8, 9};
    std::vector<double> thresholds{0.1, 0.01, 0.001};
    int n_graphs = 1000;
    std::uint64_t seed = 7;
    double noise_var = 1.0;
};

// nb is clamped to p-1; duplicate cells after clamping are dropped
std::vector<std::pair<int, double>> sweep_cells(const std::vector<int>& nodes, const std::vector<double>& nb_sizes);
std::vector<SweepRow> violation_sweep(const SweepConfig& cfg);
std::string sweep_csv(const std::vector<SweepRow>& rows);

struct MaxKRow {
    int p = 0;
    double nb = 0.0;
    int n_graphs = 0;
    int with_triangles = 0;
    double min_k = 0.0;
    double mean_k = 0.0;
    double median_k = 0.0;
};
std::vector<MaxKRow> max_k_study(const SweepConfig& cfg);
std::string max_k_csv(const std::vector<MaxKRow>& rows);

struct ProfileRow {
    double nb = 0.0;
    double bin_lo = 0.0, bin_hi = 0.0;
    int edges = 0;      // triangle edges whose |coefficient| falls in the bin
    int violated = 0;
    double proportion = 0.0;  // violated / edges (0 when empty)
    double share = 0.0;       // violated / all violated edges at this nb
};
struct ProfileConfig {
    int p = 8;
    std::vector<double> nb_sizes{2, 3, 4, 5, 6};
    double k = 0.1;
    int n_graphs = 1000;
    int bins = 10;
    std::uint64_t seed = 7;
    double noise_var = 1.0;
};
std::vector<ProfileRow> edge_strength_violation_profile(const ProfileConfig& cfg);
std::string profile_csv(const std::vector<ProfileRow>& rows);

}  // namespace lc::faith
