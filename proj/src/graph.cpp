#include "latentcycle/graph.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "latentcycle/error.hpp"
#include "latentcycle/util.hpp"

namespace lc::graph {

DirectedGraph::DirectedGraph(std::vector<Vertex> vertices, std::vector<Edge> edges)
    : vertices_(std::move(vertices)) {
    const int p = size();
    for (int i = 0; i < p; ++i)
        require(vertices_[i].id == i, "vertex ids must be dense 0..p-1 in order (got id " +
                                          std::to_string(vertices_[i].id) + " at position " + std::to_string(i) + ")");
    std::set<std::string> seen;
    for (const auto& v : vertices_) require(seen.insert(v.label).second, "duplicate vertex label '" + v.label + "'");
    adj_.assign(static_cast<std::size_t>(p) * p, 0);
    parents_.assign(p, {});
    children_.assign(p, {});
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    for (auto [u, v] : edges) {
        require(u >= 0 && u < p && v >= 0 && v < p,
                "edge endpoint not a declared vertex: [" + std::to_string(u) + "," + std::to_string(v) + "]");
        require(u != v, "self-loop on vertex " + std::to_string(u));
        adj_[u * p + v] = 1;
        parents_[v].push_back(u);
        children_[u].push_back(v);
    }
    for (auto& ps : parents_) std::sort(ps.begin(), ps.end());
    for (auto& cs : children_) std::sort(cs.begin(), cs.end());
    edges_ = std::move(edges);
}

std::vector<int> DirectedGraph::observed() const {
    std::vector<int> out;
    for (const auto& v : vertices_)
        if (v.kind == VertexKind::observed) out.push_back(v.id);
    return out;
}

std::vector<int> DirectedGraph::latents() const {
    std::vector<int> out;
    for (const auto& v : vertices_)
        if (v.kind == VertexKind::latent) out.push_back(v.id);
    return out;
}

int DirectedGraph::find(const std::string& label) const {
    for (const auto& v : vertices_)
        if (v.label == label) return v.id;
    return -1;
}

int DirectedGraph::index_of(const std::string& label) const {
    int v = find(label);
    require(v >= 0, "unknown vertex label '" + label + "'");
    return v;
}

VertexSet DirectedGraph::resolve(const std::vector<std::string>& labels) const {
    VertexSet out;
    for (const auto& l : labels) out.push_back(index_of(l));
    return out;
}

std::vector<char> DirectedGraph::ancestors_avoiding(const VertexSet& targets, const std::vector<char>& blocked) const {
    std::vector<char> seen(size(), 0);
    std::deque<int> q;
    for (int t : targets)
        if (!blocked[t] && !seen[t]) {
            seen[t] = 1;
            q.push_back(t);
        }
    while (!q.empty()) {
        int v = q.front();
        q.pop_front();
        for (int u : parents_[v])
            if (!blocked[u] && !seen[u]) {
                seen[u] = 1;
                q.push_back(u);
            }
    }
    return seen;
}

std::vector<char> DirectedGraph::descendants_of(int v) const {
    std::vector<char> seen(size(), 0);
    std::deque<int> q{v};
    seen[v] = 1;
    while (!q.empty()) {
        int u = q.front();
        q.pop_front();
        for (int c : children_[u])
            if (!seen[c]) {
                seen[c] = 1;
                q.push_back(c);
            }
    }
    return seen;
}

namespace {

std::vector<char> mask_of(int p, const VertexSet& s) {
    std::vector<char> m(p, 0);
    for (int v : s) {
        require(v >= 0 && v < p, "vertex id out of range: " + std::to_string(v));
        m[v] = 1;
    }
    return m;
}

void check_disjoint(int p, const VertexSet& a, const VertexSet& b, const char* what) {
    auto ma = mask_of(p, a);
    for (int v : b) require(!ma[v], std::string("overlapping vertex sets: ") + what);
}

}  // namespace

std::vector<int> topological_order(const DirectedGraph& g) {
    const int p = g.size();
    std::vector<int> indeg(p, 0), order;
    for (int v = 0; v < p; ++v) indeg[v] = static_cast<int>(g.parents(v).size());
    std::deque<int> q;
    for (int v = 0; v < p; ++v)
        if (indeg[v] == 0) q.push_back(v);
    while (!q.empty()) {
        int v = q.front();
        q.pop_front();
        order.push_back(v);
        for (int c : g.children(v))
            if (--indeg[c] == 0) q.push_back(c);
    }
    require(static_cast<int>(order.size()) == p, "graph has a directed cycle");
    return order;
}

bool is_acyclic(const DirectedGraph& g) {
    try {
        topological_order(g);
        return true;
    } catch (const Error&) {
        return false;
    }
}

bool d_separated(const DirectedGraph& g, const VertexSet& A, const VertexSet& B, const VertexSet& C) {
    const int p = g.size();
    check_disjoint(p, A, B, "A and B");
    check_disjoint(p, A, C, "A and C");
    check_disjoint(p, B, C, "B and C");
    auto inC = mask_of(p, C);
    auto inB = mask_of(p, B);
    auto ancC = g.ancestors_avoiding(C, std::vector<char>(p, 0));
    // state: vertex * 2 + (0 = reached against an edge, 1 = reached along an edge)
    std::vector<char> seen(2 * p, 0);
    std::deque<std::pair<int, int>> q;
    for (int a : A) {
        seen[2 * a] = 1;
        q.emplace_back(a, 0);
    }
    while (!q.empty()) {
        auto [v, dir] = q.front();
        q.pop_front();
        if (inB[v]) return false;
        auto push = [&](int w, int d) {
            if (!seen[2 * w + d]) {
                seen[2 * w + d] = 1;
                q.emplace_back(w, d);
            }
        };
        if (dir == 0) {
            if (inC[v]) continue;
            for (int u : g.parents(v)) push(u, 0);
            for (int c : g.children(v)) push(c, 1);
        } else {
            if (!inC[v])
                for (int c : g.children(v)) push(c, 1);
            if (ancC[v])
                for (int u : g.parents(v)) push(u, 0);
        }
    }
    return true;
}

std::vector<std::vector<int>> directed_simple_paths(const DirectedGraph& g, int u, int v, int max_edges) {
    std::vector<std::vector<int>> out;
    std::vector<int> path{u};
    std::vector<char> on(g.size(), 0);
    on[u] = 1;
    std::function<void(int)> dfs = [&](int w) {
        if (w == v) {
            out.push_back(path);
            return;
        }
        if (max_edges >= 0 && static_cast<int>(path.size()) - 1 >= max_edges) return;
        for (int c : g.children(w)) {
            if (on[c]) continue;
            on[c] = 1;
            path.push_back(c);
            dfs(c);
            path.pop_back();
            on[c] = 0;
        }
    };
    dfs(u);
    return out;
}

std::vector<Trek> enumerate_simple_treks(const DirectedGraph& g, int x, int y) {
    std::vector<Trek> out;
    for (int t = 0; t < g.size(); ++t) {
        auto pa = directed_simple_paths(g, t, x);
        if (pa.empty()) continue;
        auto pb = directed_simple_paths(g, t, y);
        for (const auto& a : pa)
            for (const auto& b : pb) {
                Trek tr{t, a, b, true};
                for (std::size_t i = 1; i < a.size() && tr.simple; ++i)
                    if (std::find(b.begin() + 1, b.end(), a[i]) != b.end()) tr.simple = false;
                out.push_back(std::move(tr));
            }
    }
    return out;
}

bool t_separates(const DirectedGraph& g, const VertexSet& CA, const VertexSet& CB, const VertexSet& A,
                 const VertexSet& B) {
    const int p = g.size();
    auto ua = g.ancestors_avoiding(A, mask_of(p, CA));
    auto ub = g.ancestors_avoiding(B, mask_of(p, CB));
    for (int v = 0; v < p; ++v)
        if (ua[v] && ub[v]) return false;
    return true;
}

std::optional<int> min_tsep_size(const DirectedGraph& g, const VertexSet& A, const VertexSet& B, int bound,
                                 const SearchLimits& limits) {
    require(bound >= 0, "bound must be >= 0");
    if (g.size() > limits.max_vertices)
        fail(ErrorKind::resource, "exhaustive choke-set search limited to " + std::to_string(limits.max_vertices) +
                                      " vertices (graph has " + std::to_string(g.size()) +
                                      "); raise --max-search-vertices or use the max-flow routine");
    const int p = g.size();
    std::vector<char> none(p, 0);
    auto anA = g.ancestors_avoiding(A, none);
    auto anB = g.ancestors_avoiding(B, none);
    std::vector<int> candA, candB;
    for (int v = 0; v < p; ++v) {
        if (anA[v] && anB[v]) {
            candA.push_back(v);
            candB.push_back(v);
        } else {
            if (anA[v]) candA.push_back(v);
            if (anB[v]) candB.push_back(v);
        }
    }
    for (int s = 0; s <= bound; ++s) {
        for (int a = 0; a <= s; ++a) {
            bool found = false;
            util::for_each_combination(candA, a, [&](const std::vector<int>& ca) {
                util::for_each_combination(candB, s - a, [&](const std::vector<int>& cb) {
                    if (t_separates(g, ca, cb, A, B)) found = true;
                    return !found;
                });
                return !found;
            });
            if (found) return s;
        }
    }
    return std::nullopt;
}

namespace {

struct FlowNet {
    struct Arc {
        int to, rev;
        int cap;
    };
    std::vector<std::vector<Arc>> adj;
    explicit FlowNet(int n) : adj(n) {}
    void add(int u, int v, int cap) {
        adj[u].push_back({v, static_cast<int>(adj[v].size()), cap});
        adj[v].push_back({u, static_cast<int>(adj[u].size()) - 1, 0});
    }
    int maxflow(int s, int t) {
        int flow = 0;
        const int n = static_cast<int>(adj.size());
        for (;;) {
            std::vector<int> level(n, -1);
            std::deque<int> q{s};
            level[s] = 0;
            while (!q.empty()) {
                int u = q.front();
                q.pop_front();
                for (auto& a : adj[u])
                    if (a.cap > 0 && level[a.to] < 0) {
                        level[a.to] = level[u] + 1;
                        q.push_back(a.to);
                    }
            }
            if (level[t] < 0) return flow;
            std::vector<std::size_t> it(n, 0);
            std::function<int(int, int)> push = [&](int u, int f) -> int {
                if (u == t) return f;
                for (; it[u] < adj[u].size(); ++it[u]) {
                    auto& a = adj[u][it[u]];
                    if (a.cap > 0 && level[a.to] == level[u] + 1) {
                        int d = push(a.to, std::min(f, a.cap));
                        if (d > 0) {
                            a.cap -= d;
                            adj[a.to][a.rev].cap += d;
                            return d;
                        }
                    }
                }
                return 0;
            };
            while (int f = push(s, std::numeric_limits<int>::max())) flow += f;
        }
    }
};

// A-side copies walk edges backwards from the A endpoints up to the top,
// cross to the B-side copy at the top, then walk forwards to B.
int trek_flow(const DirectedGraph& g, const VertexSet& A, const VertexSet& B, bool cut_a_side) {
    const int p = g.size();
    const int INF = 1 << 29;
    auto ain = [](int v) { return v; };
    auto aout = [p](int v) { return p + v; };
    auto bin = [p](int v) { return 2 * p + v; };
    auto bout = [p](int v) { return 3 * p + v; };
    const int s = 4 * p, t = 4 * p + 1;
    FlowNet net(4 * p + 2);
    for (int v = 0; v < p; ++v) {
        net.add(ain(v), aout(v), cut_a_side ? 1 : INF);
        net.add(aout(v), bin(v), INF);
        net.add(bin(v), bout(v), 1);
    }
    for (auto [u, w] : g.edges()) {
        net.add(aout(w), ain(u), INF);
        net.add(bout(u), bin(w), INF);
    }
    for (int a : util::sorted_unique(A)) net.add(s, ain(a), INF);
    for (int b : util::sorted_unique(B)) net.add(bout(b), t, INF);
    return net.maxflow(s, t);
}

}  // namespace

int min_choke_size(const DirectedGraph& g, const VertexSet& A, const VertexSet& B) {
    return trek_flow(g, A, B, true);
}

int min_one_sided_choke(const DirectedGraph& g, const VertexSet& A, const VertexSet& B) {
    return trek_flow(g, A, B, false);
}

bool every_ktrek_system_has_sided_intersection(const DirectedGraph& g, const std::vector<VertexSet>& S,
                                               int len_cap, const SearchLimits& limits) {
    const int k = static_cast<int>(S.size());
    require(k >= 2, "k-trek systems need k >= 2 sets");
    const int n = static_cast<int>(S[0].size());
    for (const auto& s : S) require(static_cast<int>(s.size()) == n, "all sets must have equal size");
    if (g.size() > limits.max_vertices)
        fail(ErrorKind::resource, "k-trek system search limited to " + std::to_string(limits.max_vertices) +
                                      " vertices (graph has " + std::to_string(g.size()) +
                                      "); raise --max-search-vertices");
    const int p = g.size();
    // paths[t][v]: simple directed paths t -> v
    std::vector<std::vector<std::vector<std::vector<int>>>> paths(p, std::vector<std::vector<std::vector<int>>>(p));
    for (int t = 0; t < p; ++t)
        for (int j = 0; j < k; ++j)
            for (int v : S[j])
                if (paths[t][v].empty()) paths[t][v] = directed_simple_paths(g, t, v, len_cap);

    std::vector<std::vector<char>> used(k, std::vector<char>(p, 0));
    std::vector<std::vector<char>> endpoint_taken(k, std::vector<char>(n, 0));
    std::vector<int> ends(k);
    long long steps = 0;
    const long long step_cap = 50'000'000;

    std::function<bool(int)> place_trek;
    std::function<bool(int, int, int)> place_side = [&](int i, int t, int j) -> bool {
        if (j == k) return place_trek(i + 1);
        for (const auto& path : paths[t][ends[j]]) {
            if (++steps > step_cap)
                fail(ErrorKind::resource, "k-trek system search exceeded 5e7 steps; lower the path-length cap");
            bool ok = true;
            for (int v : path)
                if (used[j][v]) {
                    ok = false;
                    break;
                }
            if (!ok) continue;
            for (int v : path) used[j][v] = 1;
            bool done = place_side(i, t, j + 1);
            for (int v : path) used[j][v] = 0;
            if (done) return true;
        }
        return false;
    };
    std::function<bool(int, int)> choose_ends = [&](int i, int j) -> bool {
        if (j == k) {
            for (int t = 0; t < p; ++t) {
                bool reach = true;
                for (int jj = 0; jj < k && reach; ++jj) reach = !paths[t][ends[jj]].empty();
                if (reach && place_side(i, t, 0)) return true;
            }
            return false;
        }
        if (j == 0) {
            ends[0] = S[0][i];
            return choose_ends(i, 1);
        }
        for (int e = 0; e < n; ++e) {
            if (endpoint_taken[j][e]) continue;
            endpoint_taken[j][e] = 1;
            ends[j] = S[j][e];
            bool done = choose_ends(i, j + 1);
            endpoint_taken[j][e] = 0;
            if (done) return true;
        }
        return false;
    };
    place_trek = [&](int i) -> bool {
        if (i == n) return true;
        std::vector<int> saved = ends;
        bool r = choose_ends(i, 0);
        ends = saved;
        return r;
    };
    // a system without sided intersection exists iff place_trek(0) succeeds
    return !place_trek(0);
}

std::vector<Triangle> find_triangles(const DirectedGraph& g) {
    std::vector<Triangle> out;
    const int p = g.size();
    for (int a = 0; a < p; ++a)
        for (int b = a + 1; b < p; ++b) {
            if (!g.adjacent(a, b)) continue;
            for (int c = b + 1; c < p; ++c) {
                if (!g.adjacent(a, c) || !g.adjacent(b, c)) continue;
                int tri[3] = {a, b, c};
                Triangle t{a, b, c, false};
                for (int m = 0; m < 3; ++m) {
                    int y = tri[m], x = tri[(m + 1) % 3], z = tri[(m + 2) % 3];
                    if (g.has_edge(x, y) && g.has_edge(z, y)) {
                        t = {std::min(x, z), y, std::max(x, z), true};
                        break;
                    }
                }
                out.push_back(t);
            }
        }
    return out;
}

DirectedGraph random_dag(int p, double nb, std::uint64_t seed) {
    require(p >= 0, "p must be >= 0");
    require(nb >= 0 && (p <= 1 ? nb == 0 : nb <= p - 1),
            "expected neighborhood size must lie in [0, p-1] (got " + std::to_string(nb) + ")");
    std::vector<Vertex> vs;
    for (int i = 0; i < p; ++i) vs.push_back({i, "X" + std::to_string(i + 1), VertexKind::observed});
    std::vector<Edge> es;
    if (p >= 2) {
        std::mt19937_64 rng(seed);
        std::vector<int> order(p);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        const double prob = nb / (p - 1);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int i = 0; i < p; ++i)
            for (int j = i + 1; j < p; ++j)
                if (u(rng) < prob) es.emplace_back(order[i], order[j]);
    }
    return DirectedGraph(std::move(vs), std::move(es));
}

}  // namespace lc::graph
