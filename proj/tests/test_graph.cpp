#include <doctest.h>

#include <functional>
#include <set>

#include "helpers.hpp"
#include "latentcycle/error.hpp"
#include "latentcycle/graph.hpp"
#include "latentcycle/util.hpp"

using namespace lc::graph;
using testing::ids;
using testing::load_graph;
using testing::make_graph;

namespace {

// d-separation by the moralized ancestral graph criterion (independent of the reachability walk)
bool dsep_moral(const DirectedGraph& g, const VertexSet& A, const VertexSet& B, const VertexSet& C) {
    const int p = g.size();
    std::vector<char> anc(p, 0);
    std::vector<int> stack;
    for (const auto* s : {&A, &B, &C})
        for (int v : *s) stack.push_back(v);
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        if (anc[v]) continue;
        anc[v] = 1;
        for (int u : g.parents(v)) stack.push_back(u);
    }
    std::vector<std::set<int>> adj(p);
    for (int v = 0; v < p; ++v) {
        if (!anc[v]) continue;
        const auto& pa = g.parents(v);
        for (int u : pa) {
            adj[u].insert(v);
            adj[v].insert(u);
        }
        for (std::size_t i = 0; i < pa.size(); ++i)
            for (std::size_t j = i + 1; j < pa.size(); ++j) {
                adj[pa[i]].insert(pa[j]);
                adj[pa[j]].insert(pa[i]);
            }
    }
    std::vector<char> blocked(p, 0), seen(p, 0);
    for (int c : C) blocked[c] = 1;
    for (int a : A) stack.push_back(a);
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        if (seen[v]) continue;
        seen[v] = 1;
        for (int w : adj[v])
            if (!blocked[w]) stack.push_back(w);
    }
    for (int b : B)
        if (seen[b]) return false;
    return true;
}

}  // namespace

TEST_CASE("is_acyclic") {
    CHECK(is_acyclic(make_graph("X0>X1; X1>X2")));
    CHECK_FALSE(is_acyclic(make_graph("X0>X1; X1>X0")));
    CHECK_FALSE(is_acyclic(load_graph("cycle_under_latent")));
    CHECK_THROWS_AS(topological_order(make_graph("X0>X1; X1>X0")), lc::Error);
}

TEST_CASE("d_separated on small graphs") {
    auto col = make_graph("X>Z; Y>Z");
    CHECK(d_separated(col, ids(col, "X"), ids(col, "Y"), {}));
    CHECK_FALSE(d_separated(col, ids(col, "X"), ids(col, "Y"), ids(col, "Z")));
    auto chain = make_graph("X>Y; Y>Z");
    CHECK(d_separated(chain, ids(chain, "X"), ids(chain, "Z"), ids(chain, "Y")));
    CHECK_FALSE(d_separated(chain, ids(chain, "X"), ids(chain, "Z"), {}));
    // descendant of a collider opens it
    auto desc = make_graph("X>Z; Y>Z; Z>W");
    CHECK_FALSE(d_separated(desc, ids(desc, "X"), ids(desc, "Y"), ids(desc, "W")));
    CHECK_THROWS_AS(d_separated(chain, ids(chain, "X"), ids(chain, "X"), {}), lc::Error);
}

TEST_CASE("d_separated agrees with the moralization criterion on random DAGs") {
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        auto g = random_dag(7, 2.5, seed);
        for (int a = 0; a < 7; ++a)
            for (int b = a + 1; b < 7; ++b)
                for (unsigned mask = 0; mask < (1u << 7); mask += 5) {
                    if (mask >> a & 1u || mask >> b & 1u) continue;
                    VertexSet C;
                    for (int v = 0; v < 7; ++v)
                        if (mask >> v & 1u) C.push_back(v);
                    REQUIRE(d_separated(g, {a}, {b}, C) == dsep_moral(g, {a}, {b}, C));
                    ++checked;
                }
    }
    CHECK(checked > 1000);
}

TEST_CASE("enumerate_simple_treks") {
    auto fork = make_graph("L>X1,X2");
    auto t = enumerate_simple_treks(fork, fork.index_of("X1"), fork.index_of("X2"));
    REQUIRE(t.size() == 1);
    CHECK(t[0].top == fork.index_of("L"));

    auto edge = make_graph("X>Y");
    t = enumerate_simple_treks(edge, 0, 1);
    REQUIRE(t.size() == 1);
    CHECK(t[0].top == 0);
    CHECK(t[0].side_a == std::vector<int>{0});
    CHECK(t[0].side_b == std::vector<int>{0, 1});

    auto g = load_graph("latent_chain");
    t = enumerate_simple_treks(g, g.index_of("X1"), g.index_of("X4"));
    REQUIRE(t.size() == 1);
    CHECK(t[0].top == g.index_of("L1"));
    CHECK(std::find(t[0].side_b.begin(), t[0].side_b.end(), g.index_of("L2")) != t[0].side_b.end());
}

TEST_CASE("t_separates and minimal choke sizes on the figure graphs") {
    auto g35 = load_graph("two_latents_six_children");
    CHECK(t_separates(g35, {}, ids(g35, "L1,L2"), ids(g35, "X1..3"), ids(g35, "X4..6")));
    CHECK(min_tsep_size(g35, ids(g35, "X1..3"), ids(g35, "X4..6"), 4) == 2);
    CHECK(min_choke_size(g35, ids(g35, "X1..3"), ids(g35, "X4..6")) == 2);

    auto spider = load_graph("spider");
    CHECK(t_separates(spider, ids(spider, "L"), ids(spider, "L"), ids(spider, "X1..3"), ids(spider, "X4..6")));
    CHECK_FALSE(t_separates(spider, {}, ids(spider, "L"), ids(spider, "X1..3"), ids(spider, "X4..6")));
    CHECK(min_tsep_size(spider, ids(spider, "X1..3"), ids(spider, "X4..6"), 4) == 2);
    CHECK(min_choke_size(spider, ids(spider, "X1..3"), ids(spider, "X4..6")) == 2);

    auto edge = make_graph("X>Y");
    CHECK_FALSE(t_separates(edge, {}, {}, {0}, {1}));
    auto apart = make_graph("X;Y");
    CHECK(min_tsep_size(apart, {0}, {1}, 2) == 0);
    CHECK_FALSE(min_tsep_size(edge, {0}, {1}, 0).has_value());
}

TEST_CASE("max-flow choke size equals the exhaustive search on random graphs") {
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        auto g = random_dag(7, 3.0, lc::util::mix_seed(11, seed));
        VertexSet A{0, 1}, B{5, 6};
        if (seed % 2) A = {0, 2, 4}, B = {1, 3, 6};
        auto exact = min_tsep_size(g, A, B, 6);
        REQUIRE(exact.has_value());
        CHECK(min_choke_size(g, A, B) == *exact);
    }
}

TEST_CASE("one-sided choke") {
    // L1 -> L2 chain: ({X1},{X2,X3}) are separated by L1 alone on the Y side
    auto g = load_graph("latent_chain");
    CHECK(min_one_sided_choke(g, ids(g, "X1"), ids(g, "X2,X3")) == 1);
    CHECK(min_one_sided_choke(g, ids(g, "X4"), ids(g, "X2,X3")) == 2);
}

TEST_CASE("k-trek systems with sided intersections") {
    auto star = load_graph("three_star");
    CHECK_FALSE(every_ktrek_system_has_sided_intersection(star, {ids(star, "X1"), ids(star, "X2"), ids(star, "X3")}, 4));
    auto g42 = load_graph("tensor_counterexample");
    CHECK(every_ktrek_system_has_sided_intersection(g42, {ids(g42, "X5,X6"), ids(g42, "X3,X4"), ids(g42, "X1,X2")}, 6));
    auto g35 = load_graph("two_latents_six_children");
    CHECK(every_ktrek_system_has_sided_intersection(g35, {ids(g35, "X1..3"), ids(g35, "X4..6")}, 4));
    CHECK_FALSE(every_ktrek_system_has_sided_intersection(g35, {ids(g35, "X1,X2"), ids(g35, "X4,X5")}, 4));
}

TEST_CASE("find_triangles") {
    auto t = find_triangles(make_graph("X>Y; X>Z; Y>Z"));
    REQUIRE(t.size() == 1);
    CHECK(t[0].collider_at_y);
    CHECK(t[0].y == 2);
    CHECK(find_triangles(make_graph("A>B; B>C; C>D")).empty());
    CHECK(find_triangles(make_graph("A>B,C,D; B>C,D; C>D")).size() == 4);
}

TEST_CASE("random_dag") {
    auto full = random_dag(3, 2.0, 5);
    CHECK(full.edges().size() == 3);
    CHECK(is_acyclic(full));
    CHECK(random_dag(10, 0.0, 5).edges().empty());
    double total = 0;
    const int draws = 10000;
    for (int s = 0; s < draws; ++s) total += static_cast<double>(random_dag(10, 5.0, static_cast<std::uint64_t>(s)).edges().size());
    const double expected = 45.0 * 5.0 / 9.0;
    CHECK(std::abs(total / draws - expected) < 0.02 * expected);
    CHECK(random_dag(8, 3.0, 99).edges() == random_dag(8, 3.0, 99).edges());
    CHECK_THROWS_AS(random_dag(3, 2.5, 1), lc::Error);
}
