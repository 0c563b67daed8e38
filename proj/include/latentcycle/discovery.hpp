#pragma once
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "latentcycle/graph.hpp"
#include "latentcycle/sem.hpp"
#include "latentcycle/stats.hpp"

namespace lc::discovery {

using Columns = std::vector<int>;

struct Cluster {
    Columns members;  // sorted column indices
    int latents = 1;
    bool cyclic = false;
    // which check set the flag, with the values it saw
    std::string provenance;
};

struct CausalOrder {
    std::vector<std::vector<int>> strata;        // cluster indices, earliest first
    std::vector<std::vector<int>> block_cycles;  // groups of cluster indices
    int stratum_of(int cluster) const;           // -1 if unordered
};

struct DiscoveryResult {
    std::vector<std::string> labels;
    std::vector<Cluster> clusters;
    CausalOrder order;
    std::vector<std::string> audit;
};

// Statistical or graphical answers to the three questions the algorithms ask.
class Tester {
public:
    virtual ~Tester() = default;
    virtual const std::vector<std::string>& labels() const = 0;
    int size() const { return static_cast<int>(labels().size()); }

    // rank(Sigma_{A,B}) <= r
    bool rank_at_most(const Columns& A, const Columns& B, int r);
    // smallest r accepted by rank_at_most
    int rank(const Columns& A, const Columns& B);
    // (Z, Y) satisfies GIN: some omega with omega^T E[Y Z^T] = 0 makes omega^T Y independent of Z
    bool gin(const Columns& Z, const Columns& Y);
    // omega^T Y independent of W, omega spanning the left null space of Sigma_{Y,Z}
    bool projection_independent(const Columns& Y, const Columns& Z, const Columns& W);

    std::size_t queries() const { return cache_.size(); }

protected:
    virtual bool do_rank_at_most(const Columns& A, const Columns& B, int r) = 0;
    virtual bool do_gin(const Columns& Z, const Columns& Y) = 0;
    virtual bool do_projection_independent(const Columns& Y, const Columns& Z, const Columns& W) = 0;

private:
    std::map<std::string, bool> cache_;
};

// Separation answers read off the true graph: rank by minimal choke size, GIN by the one-sided
// choke lemma, projection independence on a generic parameterization of the graph.
std::unique_ptr<Tester> oracle_tester(const graph::DirectedGraph& g, std::uint64_t seed = 1);

struct DataTesterOptions {
    double alpha = 0.05;       // GIN and projection tests
    double rank_alpha = 0.05;  // canonical-correlation rank test
    std::uint64_t seed = 1;
    stats::HsicOptions hsic;
};
std::unique_ptr<Tester> data_tester(const sem::Dataset& data, const DataTesterOptions& opt = {});

enum class LatentCountRule { halve_down, halve_up };

struct ClusterOptions {
    int max_cluster_size = 5;  // k + 1
    int max_vars = 16;
    LatentCountRule rule = LatentCountRule::halve_down;
    bool check_cycles = true;
};

std::vector<Cluster> find_causal_cyclic_clusters(Tester& t, const ClusterOptions& opt = {},
                                                 std::vector<std::string>* audit = nullptr);

// Root-set extraction over the acyclic clusters; cyclic clusters are left out of the order.
CausalOrder learn_latent_causal_order(Tester& t, const std::vector<Cluster>& clusters,
                                      std::vector<std::string>* audit = nullptr);

// Re-checks the latest stratum by rank and places every cyclic cluster behind its ruler.
CausalOrder learn_order_for_cyclic_clusters(Tester& t, std::vector<Cluster>& clusters, CausalOrder order,
                                            const ClusterOptions& opt = {},
                                            std::vector<std::string>* audit = nullptr);

struct BlockCycleOptions {
    int max_blocks = 12;  // bipartitions grow as 2^|C|
};

struct BlockPairs {
    std::vector<std::pair<std::vector<int>, std::vector<int>>> noncyclic;
    std::vector<std::pair<std::vector<int>, std::vector<int>>> cyclic;
    std::vector<std::vector<int>> groups;  // pruned cyclic pairs merged into connected groups
};

BlockPairs find_cycles_between_blocks(Tester& t, const std::vector<Cluster>& clusters, const std::vector<int>& C,
                                      const std::vector<int>& B, const BlockCycleOptions& opt = {});

CausalOrder learn_order_between_latents(Tester& t, const std::vector<Cluster>& clusters,
                                        const BlockCycleOptions& opt = {},
                                        std::vector<std::string>* audit = nullptr);

// clusters with cycles under latents, then their order
DiscoveryResult discover_cyclic_clusters(Tester& t, const ClusterOptions& opt = {});
// clusters, then the order between latent blocks with block cycles
DiscoveryResult discover_block_cycles(Tester& t, const ClusterOptions& copt = {}, const BlockCycleOptions& bopt = {});

// Clusters, cyclic flags and latent order as the true graph defines them (observed columns in graph order).
DiscoveryResult true_structure(const graph::DirectedGraph& g);

struct DiscoveryMetrics {
    double cluster_recall = 1, cluster_precision = 1;
    double latent_order_recall = 1, latent_order_precision = 1;
    double cyclic_recall = 1, cyclic_precision = 1;
    // names of ratios that were 0/0 and reported as 1
    std::vector<std::string> undefined;
};

DiscoveryMetrics evaluate(const DiscoveryResult& found, const DiscoveryResult& truth);
DiscoveryMetrics evaluate(const DiscoveryResult& found, const graph::DirectedGraph& truth);

std::string block_name(const DiscoveryResult& r, int cluster);
nlohmann::json result_to_json(const DiscoveryResult& r);
DiscoveryResult result_from_json(const nlohmann::json& j);
nlohmann::json metrics_to_json(const DiscoveryMetrics& m);

}  // namespace lc::discovery
