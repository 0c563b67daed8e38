#include <doctest.h>

#include <map>
#include <set>

#include "helpers.hpp"
#include "latentcycle/error.hpp"
#include "latentcycle/sem.hpp"
#include "latentcycle/stats.hpp"
#include "latentcycle/util.hpp"
#include "latentcycle/vcsgs.hpp"

using namespace lc::vcsgs;
using lc::graph::DirectedGraph;
using lc::sem::NoiseSpec;
using testing::make_graph;

namespace {

lc::sem::LinearSem gaussian_sem(const DirectedGraph& g, const std::vector<std::tuple<int, int, double>>& coef) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(g.size(), g.size());
    for (auto [u, v, c] : coef) A(u, v) = c;
    return lc::sem::LinearSem(g, A, std::vector<NoiseSpec>(g.size(), NoiseSpec::gaussian(0, 1)));
}

std::set<std::pair<int, int>> unshielded_colliders(const DirectedGraph& g, const std::vector<std::pair<int, int>>& edges) {
    std::set<std::pair<int, int>> has(edges.begin(), edges.end());
    std::set<std::pair<int, int>> out;
    const int p = g.size();
    for (int y = 0; y < p; ++y)
        for (int x = 0; x < p; ++x)
            for (int z = x + 1; z < p; ++z)
                if (has.count({x, y}) && has.count({z, y}) && !g.adjacent(x, z)) out.insert({x * p + z, y});
    return out;
}

// Markov equivalence class by brute force: every acyclic orientation of the skeleton with the same
// unshielded colliders. Returns, per skeleton edge (a<b), the set of directions seen.
std::map<std::pair<int, int>, std::set<int>> equivalence_directions(const DirectedGraph& g) {
    std::vector<std::pair<int, int>> skel;
    for (auto [u, v] : g.edges()) skel.emplace_back(std::min(u, v), std::max(u, v));
    const auto target = unshielded_colliders(g, g.edges());
    std::map<std::pair<int, int>, std::set<int>> dirs;
    for (unsigned mask = 0; mask < (1u << skel.size()); ++mask) {
        std::vector<std::pair<int, int>> e;
        for (std::size_t i = 0; i < skel.size(); ++i)
            e.push_back(mask >> i & 1u ? std::make_pair(skel[i].second, skel[i].first) : skel[i]);
        DirectedGraph cand(g.vertices(), e);
        if (!lc::graph::is_acyclic(cand) || unshielded_colliders(g, e) != target) continue;
        for (std::size_t i = 0; i < skel.size(); ++i) dirs[skel[i]].insert(mask >> i & 1u ? -1 : 1);
    }
    return dirs;
}

}  // namespace

TEST_CASE("independent columns give an empty pattern") {
    auto g = make_graph("X;Y");
    auto s = gaussian_sem(g, {});
    auto ci = fisher_tester(lc::sem::sample(s, 2000, 1), 0.01);
    auto h = run_vcsgs(*ci);
    CHECK_FALSE(h.adjacent(0, 1));
    CHECK(h.triples().empty());
}

TEST_CASE("collider data is oriented in most seeds") {
    auto g = make_graph("X>Z; Y>Z");
    auto s = gaussian_sem(g, {{0, 1, 1.0}, {2, 1, -1.0}});
    int oriented = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto ci = fisher_tester(lc::sem::sample(s, 10000, lc::util::mix_seed(3, seed)), 0.01);
        auto h = run_vcsgs(*ci);
        oriented += h.directed(0, 1) && h.directed(2, 1) && !h.adjacent(0, 2);
    }
    CHECK(oriented >= 45);
}

TEST_CASE("chain data gives a noncollider") {
    auto g = make_graph("X>Y; Y>Z");
    auto s = gaussian_sem(g, {{0, 1, 1.0}, {1, 2, 1.0}});
    auto ci = fisher_tester(lc::sem::sample(s, 10000, 2), 0.01);
    auto h = run_vcsgs(*ci);
    CHECK(h.adjacent(0, 1));
    CHECK(h.adjacent(1, 2));
    CHECK_FALSE(h.adjacent(0, 2));
    CHECK(h.undirected(0, 1));
    const Triple* t = h.find_triple(0, 1, 2);
    REQUIRE(t != nullptr);
    CHECK(t->mark == TripleMark::noncollider);
}

TEST_CASE("oracle VCSGS returns the equivalence-class pattern on random DAGs") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        auto g = lc::graph::random_dag(6, 2.5, lc::util::mix_seed(9, seed));
        auto ci = oracle_tester(g);
        auto h = run_vcsgs(*ci);
        CHECK(h.conflicts == 0);
        CHECK_FALSE(classify_errors(h, g).any());
        auto dirs = equivalence_directions(g);
        for (int a = 0; a < 6; ++a)
            for (int b = a + 1; b < 6; ++b) {
                REQUIRE(h.adjacent(a, b) == g.adjacent(a, b));
                if (!g.adjacent(a, b)) continue;
                const auto& d = dirs.at({a, b});
                if (d.size() == 2) {
                    CHECK(h.undirected(a, b));
                } else if (*d.begin() == 1) {
                    CHECK(h.directed(a, b));
                } else {
                    CHECK(h.directed(b, a));
                }
            }
    }
}

TEST_CASE("error classification") {
    auto g = make_graph("X>Z; Y>Z; Z>W");
    auto right = pattern_from_dag(g);
    auto e = classify_errors(right, g);
    CHECK_FALSE(e.any());
    CHECK(e.missing_edges == 0);

    auto extra = pattern_from_dag(make_graph("X>Z; Y>Z; Z>W; X>W"));
    CHECK(classify_errors(extra, g).kind1);

    auto missing = pattern_from_dag(make_graph("X>Z; Y>Z; Z;W"));
    auto m = classify_errors(missing, g);
    CHECK_FALSE(m.any());
    CHECK(m.missing_edges == 1);

    auto flipped = pattern_from_dag(make_graph("X>Z; Y>Z; W>Z"));
    auto f = classify_errors(flipped, g);
    CHECK_FALSE(f.kind1);
    CHECK(f.kind3);

    // a noncollider mark where the truth has a collider
    auto ci = oracle_tester(make_graph("X>Z; Z>Y; Z>W"));
    auto wrong = run_vcsgs(*ci);
    auto w = classify_errors(wrong, g);
    CHECK_FALSE(w.kind1);
    CHECK(w.kind2);
    CHECK_FALSE(w.kind3);
}

TEST_CASE("edge estimation") {
    auto g = make_graph("X1>X2; X2>X3; X4");
    auto s = gaussian_sem(g, {{0, 1, 1.0}, {1, 2, 1.0}});
    auto d = lc::sem::sample(s, 20000, 4);

    // undirected chain: endpoints stay Unknown, isolated vertex gets a marginal table
    auto ci = fisher_tester(d, 0.01);
    auto h = run_vcsgs(*ci);
    auto m = edge_estimation(d, h, 1e9);
    CHECK(m.tables[0].unknown);
    CHECK(m.tables[1].unknown);
    CHECK_FALSE(m.tables[3].unknown);
    CHECK(m.tables[3].parents.empty());

    auto oriented = edge_estimation(d, pattern_from_dag(g), 1e9);
    for (const auto& t : oriented.tables) {
        if (t.unknown) continue;
        const std::size_t cells = t.parent_cells();
        const int ybins = t.bins[0];
        for (std::size_t c = 0; c < cells; ++c) {
            if (!t.known_config[c]) continue;
            double total = 0;
            for (int yb = 0; yb < ybins; ++yb) total += t.density[yb * cells + c] / ybins;
            CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
        }
    }

    auto all_unknown = oriented;
    for (auto& t : all_unknown.tables) t.unknown = true;
    CHECK(conditional_probability_distance(all_unknown, s) == 0);
    CHECK(conditional_probability_distance(exact_model(s, oriented), s) == doctest::Approx(0.0));
    CHECK_THROWS_AS(edge_estimation(d, h, 0.0), lc::Error);
}

TEST_CASE("estimated conditional density is close to the truth on interior cells") {
    auto g = make_graph("X1>X2");
    auto s = gaussian_sem(g, {{0, 1, 1.0}});
    auto d = lc::sem::sample(s, 100000, 8);
    auto est = edge_estimation(d, pattern_from_dag(g), 1e9);
    auto truth = exact_model(s, est);
    const auto& a = est.tables[1];
    const auto& b = truth.tables[1];
    REQUIRE_FALSE(a.unknown);
    const int ybins = a.bins[0], xbins = a.bins[1];
    // interior: parent cells holding at least 200 rows; tail cells of a few dozen rows are noise
    auto parent_mass = lc::stats::histogram_estimate(d, {0}, {xbins}).mass;
    double worst = 0;
    int cells = 0;
    for (int xb = 0; xb < xbins; ++xb) {
        if (!a.known_config[xb] || parent_mass[xb] < 0.002) continue;
        ++cells;
        for (int yb = 1; yb + 1 < ybins; ++yb) {
            const std::size_t k = static_cast<std::size_t>(yb) * xbins + xb;
            // densities live on the rescaled cube; divide by the y range for original units
            worst = std::max(worst, std::abs(a.density[k] - b.density[k]) / (est.hi[1] - est.lo[1]));
        }
    }
    CHECK(cells >= 10);
    CHECK(worst < 0.1);
}
