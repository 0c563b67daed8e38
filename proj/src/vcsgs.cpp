#include "latentcycle/vcsgs.hpp"

#include <algorithm>
#include <cmath>

#include "latentcycle/error.hpp"
#include "latentcycle/stats.hpp"
#include "latentcycle/util.hpp"

namespace lc::vcsgs {

PatternGraph::PatternGraph(std::vector<std::string> labels) : labels_(std::move(labels)) {
    const std::size_t p = labels_.size();
    adj_.assign(p * p, 1);
    arrow_.assign(p * p, 0);
    for (std::size_t i = 0; i < p; ++i) adj_[i * p + i] = 0;
}

void PatternGraph::remove_edge(int a, int b) {
    adj_[idx(a, b)] = adj_[idx(b, a)] = 0;
    arrow_[idx(a, b)] = arrow_[idx(b, a)] = 0;
}

bool PatternGraph::orient(int a, int b) {
    if (!adjacent(a, b)) return false;
    if (directed(b, a)) {
        ++conflicts;
        return false;
    }
    arrow_[idx(a, b)] = 1;
    return true;
}

const Triple* PatternGraph::find_triple(int x, int y, int z) const {
    if (x > z) std::swap(x, z);
    for (const auto& t : triples_)
        if (t.x == x && t.y == y && t.z == z) return &t;
    return nullptr;
}

PairMark PatternGraph::pair_mark(int a, int b) const {
    if (adjacent(a, b)) return PairMark::adjacent;
    return definite_ ? PairMark::definitely_nonadjacent : PairMark::apparently_nonadjacent;
}

// ---- CI testers ----

bool CiTester::independent(int i, int j, const std::vector<int>& S) {
    if (i > j) std::swap(i, j);
    std::uint64_t mask = 0;
    for (int s : S) mask |= std::uint64_t{1} << s;
    std::uint64_t key = mask | (static_cast<std::uint64_t>(i) << 48) | (static_cast<std::uint64_t>(j) << 56);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    bool r = test(i, j, S);
    cache_.emplace(key, r);
    return r;
}

namespace {

class FisherTester : public CiTester {
public:
    FisherTester(const sem::Dataset& d, double alpha)
        : labels_(d.labels), n_(d.rows()), alpha_(alpha), cov_(stats::sample_covariance(d.values)) {}
    int size() const override { return static_cast<int>(labels_.size()); }
    std::vector<std::string> labels() const override { return labels_; }

protected:
    bool test(int i, int j, const std::vector<int>& S) override {
        double r;
        try {
            r = sem::partial_correlation(cov_, i, j, S);
        } catch (const Error& e) {
            fail(e.kind(), "CI test " + labels_[i] + " _||_ " + labels_[j] + " | " + std::to_string(S.size()) +
                               " variables: " + e.what());
        }
        return stats::fisher_z_from_partial(r, n_, static_cast<int>(S.size()), alpha_).independent();
    }

private:
    std::vector<std::string> labels_;
    int n_;
    double alpha_;
    Eigen::MatrixXd cov_;
};

class NonparamTester : public CiTester {
public:
    NonparamTester(const sem::Dataset& d, double alpha, int n_perm, std::uint64_t seed)
        : data_(d), alpha_(alpha), n_perm_(n_perm), seed_(seed) {}
    int size() const override { return data_.cols(); }
    std::vector<std::string> labels() const override { return data_.labels; }

protected:
    bool test(int i, int j, const std::vector<int>& S) override {
        std::uint64_t s = util::mix_seed(seed_, static_cast<std::uint64_t>(i) * 131 + j);
        for (int v : S) s = util::mix_seed(s, static_cast<std::uint64_t>(v));
        return stats::l1_permutation_test(data_, i, j, S, alpha_, n_perm_, s).independent();
    }

private:
    sem::Dataset data_;
    double alpha_;
    int n_perm_;
    std::uint64_t seed_;
};

class OracleTester : public CiTester {
public:
    explicit OracleTester(graph::DirectedGraph g) : g_(std::move(g)) {}
    int size() const override { return g_.size(); }
    std::vector<std::string> labels() const override {
        std::vector<std::string> out;
        for (const auto& v : g_.vertices()) out.push_back(v.label);
        return out;
    }

protected:
    bool test(int i, int j, const std::vector<int>& S) override { return graph::d_separated(g_, {i}, {j}, S); }

private:
    graph::DirectedGraph g_;
};

// all subsets of `pool`, smallest first; stops when fn returns false
bool for_each_subset(const std::vector<int>& pool, const std::function<bool(const std::vector<int>&)>& fn) {
    for (int k = 0; k <= static_cast<int>(pool.size()); ++k)
        if (!util::for_each_combination(pool, k, fn)) return false;
    return true;
}

std::vector<int> all_but(int p, std::initializer_list<int> skip) {
    std::vector<int> out;
    for (int v = 0; v < p; ++v)
        if (std::find(skip.begin(), skip.end(), v) == skip.end()) out.push_back(v);
    return out;
}

// does any DAG extension violate the local Markov property? nullopt if the cap is hit
std::optional<bool> all_extensions_markov(const PatternGraph& h, CiTester& ci, std::size_t cap) {
    const int p = h.size();
    std::vector<std::pair<int, int>> free_edges;
    for (int a = 0; a < p; ++a)
        for (int b = a + 1; b < p; ++b)
            if (h.undirected(a, b)) free_edges.emplace_back(a, b);
    if (free_edges.size() > 20) return std::nullopt;
    const std::uint64_t combos = std::uint64_t{1} << free_edges.size();
    std::size_t found = 0;
    for (std::uint64_t bits = 0; bits < combos; ++bits) {
        std::vector<graph::Edge> edges;
        for (int a = 0; a < p; ++a)
            for (int b = 0; b < p; ++b)
                if (h.directed(a, b)) edges.emplace_back(a, b);
        for (std::size_t e = 0; e < free_edges.size(); ++e) {
            auto [a, b] = free_edges[e];
            if (bits >> e & 1) edges.emplace_back(b, a);
            else edges.emplace_back(a, b);
        }
        std::vector<graph::Vertex> vs;
        for (int v = 0; v < p; ++v) vs.push_back({v, h.labels()[v], graph::VertexKind::observed});
        graph::DirectedGraph g(vs, edges);
        if (!graph::is_acyclic(g)) continue;
        bool ok = true;
        for (const auto& t : h.triples()) {
            bool col = g.has_edge(t.x, t.y) && g.has_edge(t.z, t.y);
            if (t.mark == TripleMark::collider && !col) ok = false;
            if (t.mark == TripleMark::noncollider && col) ok = false;
        }
        if (!ok) continue;
        if (++found > cap) return std::nullopt;
        for (int v = 0; v < p && ok; ++v) {
            auto desc = g.descendants_of(v);
            const auto& pa = g.parents(v);
            for (int w = 0; w < p && ok; ++w) {
                if (w == v || desc[w] || std::binary_search(pa.begin(), pa.end(), w)) continue;
                if (!ci.independent(v, w, pa)) ok = false;
            }
        }
        if (!ok) return false;
    }
    if (found == 0) return false;
    return true;
}

}  // namespace

std::unique_ptr<CiTester> fisher_tester(const sem::Dataset& data, double alpha) {
    require(alpha > 0 && alpha < 1, "alpha must lie in (0, 1)");
    return std::make_unique<FisherTester>(data, alpha);
}

std::unique_ptr<CiTester> nonparam_tester(const sem::Dataset& data, double alpha, int n_perm, std::uint64_t seed) {
    require(alpha > 0 && alpha < 1, "alpha must lie in (0, 1)");
    return std::make_unique<NonparamTester>(data, alpha, n_perm, seed);
}

std::unique_ptr<CiTester> oracle_tester(const graph::DirectedGraph& truth) {
    return std::make_unique<OracleTester>(truth);
}

PatternGraph run_vcsgs(CiTester& ci, const VcsgsOptions& opt) {
    const int p = ci.size();
    require(p >= 2, "VCSGS needs at least 2 variables");
    if (p > opt.max_vertices)
        fail(ErrorKind::resource, "VCSGS searches all conditioning subsets; " + std::to_string(p) +
                                      " variables exceed the cap of " + std::to_string(opt.max_vertices) +
                                      " (--max-vertices)");
    PatternGraph h(ci.labels());

    for (int x = 0; x < p; ++x)
        for (int y = x + 1; y < p; ++y) {
            bool sep = !for_each_subset(all_but(p, {x, y}), [&](const std::vector<int>& S) {
                return !ci.independent(x, y, S);
            });
            if (sep) h.remove_edge(x, y);
        }

    for (int y = 0; y < p; ++y)
        for (int x = 0; x < p; ++x)
            for (int z = x + 1; z < p; ++z) {
                if (x == y || z == y || !h.adjacent(x, y) || !h.adjacent(z, y) || h.adjacent(x, z)) continue;
                Triple t{x, y, z, TripleMark::ambiguous};
                bool dep_with_y = for_each_subset(all_but(p, {x, y, z}), [&](const std::vector<int>& S) {
                    std::vector<int> s2 = S;
                    s2.push_back(y);
                    return !ci.independent(x, z, s2);
                });
                if (dep_with_y) {
                    t.mark = TripleMark::collider;
                    h.orient(x, y);
                    h.orient(z, y);
                } else {
                    bool dep_without_y = for_each_subset(all_but(p, {x, y, z}), [&](const std::vector<int>& S) {
                        return !ci.independent(x, z, S);
                    });
                    t.mark = dep_without_y ? TripleMark::noncollider : TripleMark::ambiguous;
                }
                h.triples().push_back(t);
            }

    auto noncollider = [&](int a, int b, int c) {
        const Triple* t = h.find_triple(a, b, c);
        return t && t->mark == TripleMark::noncollider;
    };
    for (bool changed = true; changed;) {
        changed = false;
        for (int x = 0; x < p; ++x)
            for (int y = 0; y < p; ++y) {
                if (!h.directed(x, y)) continue;
                for (int z = 0; z < p; ++z) {
                    if (z == x || z == y) continue;
                    if (h.undirected(y, z) && noncollider(x, y, z)) changed |= h.orient(y, z);
                    if (h.directed(y, z) && h.undirected(x, z)) changed |= h.orient(x, z);
                    if (h.directed(z, y) && x < z) {
                        for (int w = 0; w < p; ++w)
                            if (w != x && w != y && w != z && noncollider(x, w, z) && h.undirected(w, y))
                                changed |= h.orient(w, y);
                    }
                }
            }
    }

    bool any_ambiguous = std::any_of(h.triples().begin(), h.triples().end(),
                                     [](const Triple& t) { return t.mark == TripleMark::ambiguous; });
    if (any_ambiguous) {
        auto ok = all_extensions_markov(h, ci, opt.max_extensions);
        h.set_definite_nonadjacency(ok.value_or(false));
    }
    return h;
}

PatternGraph pattern_from_dag(const graph::DirectedGraph& g) {
    std::vector<std::string> labels;
    for (const auto& v : g.vertices()) labels.push_back(v.label);
    PatternGraph h(labels);
    for (int a = 0; a < g.size(); ++a)
        for (int b = a + 1; b < g.size(); ++b)
            if (!g.adjacent(a, b)) h.remove_edge(a, b);
    for (auto [a, b] : g.edges()) h.orient(a, b);
    return h;
}

nlohmann::json pattern_to_json(const PatternGraph& h) {
    nlohmann::json edges = nlohmann::json::array(), triples = nlohmann::json::array(),
                   nonadj = nlohmann::json::array();
    const auto& L = h.labels();
    for (int a = 0; a < h.size(); ++a)
        for (int b = a + 1; b < h.size(); ++b) {
            if (h.directed(a, b))
                edges.push_back({{"from", L[a]}, {"to", L[b]}, {"state", "directed"}});
            else if (h.directed(b, a))
                edges.push_back({{"from", L[b]}, {"to", L[a]}, {"state", "directed"}});
            else if (h.adjacent(a, b))
                edges.push_back({{"from", L[a]}, {"to", L[b]}, {"state", "undirected"}});
            else
                nonadj.push_back({{"pair", {L[a], L[b]}},
                                  {"mark", h.definite_nonadjacency() ? "definitely_nonadjacent"
                                                                     : "apparently_nonadjacent"}});
        }
    for (const auto& t : h.triples()) {
        const char* m = t.mark == TripleMark::collider      ? "collider"
                         : t.mark == TripleMark::noncollider ? "noncollider"
                                                             : "ambiguous";
        triples.push_back({{"triple", {L[t.x], L[t.y], L[t.z]}}, {"mark", m}});
    }
    return {{"vertices", L}, {"edges", edges}, {"triples", triples}, {"nonadjacent", nonadj},
            {"orientation_conflicts", h.conflicts}};
}

ErrorKinds classify_errors(const PatternGraph& h, const graph::DirectedGraph& truth) {
    require(h.size() == truth.size(), "pattern and truth must share the vertex set");
    for (int v = 0; v < h.size(); ++v)
        require(h.labels()[v] == truth.label(v), "pattern and truth must list vertices in the same order");
    ErrorKinds e;
    const int p = h.size();
    for (int a = 0; a < p; ++a)
        for (int b = a + 1; b < p; ++b) {
            if (h.adjacent(a, b) && !truth.adjacent(a, b)) e.kind1 = true;
            if (!h.adjacent(a, b) && truth.adjacent(a, b)) ++e.missing_edges;
        }
    if (e.kind1) return e;
    for (const auto& t : h.triples())
        if (t.mark == TripleMark::noncollider && truth.has_edge(t.x, t.y) && truth.has_edge(t.z, t.y)) e.kind2 = true;
    if (e.kind2) return e;
    for (int a = 0; a < p; ++a)
        for (int b = 0; b < p; ++b)
            if (h.directed(a, b) && !truth.has_edge(a, b)) e.kind3 = true;
    return e;
}

// ---- edge estimation ----

std::size_t DensityTable::parent_cells() const {
    std::size_t c = 1;
    for (std::size_t a = 1; a < bins.size(); ++a) c *= static_cast<std::size_t>(bins[a]);
    return c;
}

namespace {

// flat parent-cell index -> per-axis bins (axis order = parents)
std::vector<int> unflatten(std::size_t flat, const std::vector<int>& pbins) {
    std::vector<int> cell(pbins.size());
    for (int a = static_cast<int>(pbins.size()) - 1; a >= 0; --a) {
        cell[a] = static_cast<int>(flat % pbins[a]);
        flat /= pbins[a];
    }
    return cell;
}

void tv_scan(DensityTable& t, double L) {
    const std::size_t pc = t.parent_cells();
    const int my = t.bins[0];
    std::vector<int> pbins(t.bins.begin() + 1, t.bins.end());
    for (std::size_t c = 0; c < pc; ++c) {
        if (!t.known_config[c]) continue;
        auto cell = unflatten(c, pbins);
        std::size_t stride = 1;
        for (int a = static_cast<int>(pbins.size()) - 1; a >= 0; --a) {
            if (cell[a] + 1 < pbins[a]) {
                std::size_t d = c + stride;
                if (t.known_config[d]) {
                    double l1 = 0.0;
                    for (int y = 0; y < my; ++y)
                        l1 += std::abs(t.density[y * pc + c] - t.density[y * pc + d]) / my;
                    if (l1 > L / pbins[a] + 1e-12) {
                        t.unknown = true;
                        t.reason = "violates TV smoothness";
                        return;
                    }
                }
            }
            stride *= static_cast<std::size_t>(pbins[a]);
        }
    }
}

}  // namespace

EstimatedModel edge_estimation(const sem::Dataset& data, const PatternGraph& h, double L) {
    require(h.size() == data.cols(), "pattern and data must have the same columns");
    require(L > 0, "TV smoothness constant L must be > 0");
    require(data.rows() >= 1, "edge estimation needs data");
    EstimatedModel m;
    m.labels = data.labels;
    for (int c = 0; c < data.cols(); ++c) {
        m.lo.push_back(data.values.col(c).minCoeff());
        m.hi.push_back(data.values.col(c).maxCoeff());
    }
    const int p = h.size();
    for (int y = 0; y < p; ++y) {
        DensityTable t;
        t.y = y;
        bool oriented = true;
        for (int x = 0; x < p; ++x) {
            if (x == y || !h.adjacent(x, y)) continue;
            if (h.directed(x, y))
                t.parents.push_back(x);
            else if (!h.directed(y, x))
                oriented = false;
        }
        if (!oriented) {
            t.reason = "undirected incident edge";
            t.parents.clear();
            m.tables.push_back(t);
            continue;
        }
        std::vector<int> dims{y};
        dims.insert(dims.end(), t.parents.begin(), t.parents.end());
        auto hist = stats::histogram_estimate(data, dims);
        t.bins = hist.bins;
        const std::size_t pc = t.parent_cells();
        const int my = t.bins[0];
        std::vector<double> pmass(pc, 0.0);
        for (int yb = 0; yb < my; ++yb)
            for (std::size_t c = 0; c < pc; ++c) pmass[c] += hist.mass[yb * pc + c];
        t.density.assign(static_cast<std::size_t>(my) * pc, 0.0);
        t.known_config.assign(pc, 0);
        for (std::size_t c = 0; c < pc; ++c) {
            if (pmass[c] <= 0) continue;
            t.known_config[c] = 1;
            for (int yb = 0; yb < my; ++yb) t.density[yb * pc + c] = hist.mass[yb * pc + c] / pmass[c] * my;
        }
        t.unknown = false;
        tv_scan(t, L);
        m.tables.push_back(std::move(t));
    }
    return m;
}

namespace {

// true density of y on the rescaled axis, averaged over y bin `yb` and over the parent cell
// (midpoint rule, kCellNodes nodes per parent axis)
constexpr int kCellNodes = 8;

double true_cell_density(const sem::LinearSem& s, const EstimatedModel& m, int y, int yb, int my,
                         const std::vector<int>& parents, const std::vector<int>& cell, const std::vector<int>& pbins) {
    const double range = m.hi[y] - m.lo[y];
    if (!(range > 0)) return 0.0;
    const double a = m.lo[y] + static_cast<double>(yb) / my * range;
    const double b = m.lo[y] + static_cast<double>(yb + 1) / my * range;
    const auto& e = s.noise()[y];
    std::size_t nodes = 1;
    for (std::size_t i = 0; i < parents.size(); ++i) nodes *= kCellNodes;
    double total = 0.0;
    for (std::size_t q = 0; q < nodes; ++q) {
        std::size_t r = q;
        double shift = 0.0;
        for (std::size_t i = 0; i < parents.size(); ++i) {
            const int k = static_cast<int>(r % kCellNodes);
            r /= kCellNodes;
            const int v = parents[i];
            const double u = (cell[i] + (k + 0.5) / kCellNodes) / pbins[i];
            shift += s.coefficients()(v, y) * (m.lo[v] + u * (m.hi[v] - m.lo[v]));
        }
        total += e.cdf(b - shift) - e.cdf(a - shift);
    }
    return total / static_cast<double>(nodes) / (b - a) * range;
}

void check_truth(const EstimatedModel& m, const sem::LinearSem& s) {
    require(static_cast<int>(m.labels.size()) == s.size(), "model and SEM must share the variable set");
    require(graph::is_acyclic(s.graph()), "conditional densities are defined for acyclic SEMs");
    for (int v = 0; v < s.size(); ++v) {
        require(m.labels[v] == s.graph().label(v), "model and SEM must list variables in the same order");
    }
}

}  // namespace

EstimatedModel exact_model(const sem::LinearSem& truth, const EstimatedModel& grid) {
    check_truth(grid, truth);
    EstimatedModel out = grid;
    for (auto& t : out.tables) {
        if (t.unknown) continue;
        const auto& tp = truth.graph().parents(t.y);
        require(tp == std::vector<int>(t.parents.begin(), t.parents.end()) ||
                    std::is_permutation(tp.begin(), tp.end(), t.parents.begin(), t.parents.end()),
                "exact tables need the true parent sets");
        std::vector<int> pbins(t.bins.begin() + 1, t.bins.end());
        const std::size_t pc = t.parent_cells();
        for (std::size_t c = 0; c < pc; ++c) {
            auto cell = unflatten(c, pbins);
            t.known_config[c] = 1;
            for (int yb = 0; yb < t.bins[0]; ++yb)
                t.density[yb * pc + c] = true_cell_density(truth, grid, t.y, yb, t.bins[0], t.parents, cell, pbins);
        }
    }
    return out;
}

double conditional_probability_distance(const EstimatedModel& m1, const sem::LinearSem& m2) {
    check_truth(m1, m2);
    double best = 0.0;
    for (const auto& t : m1.tables) {
        if (t.unknown) continue;
        const auto& tp = m2.graph().parents(t.y);
        for (int v : t.parents)
            require(std::binary_search(tp.begin(), tp.end(), v),
                    "estimated parents of " + m1.labels[t.y] + " are not a subset of the true parents");
        std::vector<int> extra;
        for (int v : tp)
            if (std::find(t.parents.begin(), t.parents.end(), v) == t.parents.end()) extra.push_back(v);
        std::vector<int> pbins(t.bins.begin() + 1, t.bins.end());
        const int grid = t.bins[0];
        const std::size_t pc = t.parent_cells();
        std::size_t extra_cells = 1;
        for (std::size_t i = 0; i < extra.size(); ++i) extra_cells *= static_cast<std::size_t>(grid);
        std::vector<int> all_parents = t.parents;
        all_parents.insert(all_parents.end(), extra.begin(), extra.end());
        std::vector<int> all_bins = pbins;
        all_bins.resize(all_parents.size(), grid);
        for (std::size_t c = 0; c < pc; ++c) {
            if (!t.known_config[c]) continue;
            auto cell = unflatten(c, pbins);
            for (std::size_t e = 0; e < extra_cells; ++e) {
                auto all_cells = cell;
                auto ecell = unflatten(e, std::vector<int>(extra.size(), grid));
                all_cells.insert(all_cells.end(), ecell.begin(), ecell.end());
                for (int yb = 0; yb < t.bins[0]; ++yb) {
                    double truth = true_cell_density(m2, m1, t.y, yb, t.bins[0], all_parents, all_cells, all_bins);
                    best = std::max(best, std::abs(t.density[yb * pc + c] - truth));
                }
            }
        }
    }
    return best;
}

double conditional_probability_distance(const EstimatedModel& m1, const EstimatedModel& m2) {
    require(m1.labels == m2.labels && m1.tables.size() == m2.tables.size(), "models must share the variable set");
    double best = 0.0;
    for (std::size_t v = 0; v < m1.tables.size(); ++v) {
        const auto& a = m1.tables[v];
        const auto& b = m2.tables[v];
        if (a.unknown || b.unknown) continue;
        require(a.parents == b.parents && a.bins == b.bins, "table comparison needs identical parents and grids");
        const std::size_t pc = a.parent_cells();
        for (std::size_t c = 0; c < pc; ++c) {
            if (!a.known_config[c] || !b.known_config[c]) continue;
            for (int yb = 0; yb < a.bins[0]; ++yb)
                best = std::max(best, std::abs(a.density[yb * pc + c] - b.density[yb * pc + c]));
        }
    }
    return best;
}

nlohmann::json model_to_json(const EstimatedModel& m) {
    nlohmann::json tables = nlohmann::json::array();
    for (const auto& t : m.tables) {
        nlohmann::json j{{"variable", m.labels[t.y]}, {"unknown", t.unknown}};
        if (!t.reason.empty()) j["reason"] = t.reason;
        if (!t.unknown) {
            std::vector<std::string> pa;
            for (int v : t.parents) pa.push_back(m.labels[v]);
            j["parents"] = pa;
            j["bins"] = t.bins;
            j["density"] = t.density;
            j["known_config"] = std::vector<int>(t.known_config.begin(), t.known_config.end());
        }
        tables.push_back(j);
    }
    return {{"variables", m.labels}, {"lo", m.lo}, {"hi", m.hi}, {"tables", tables}};
}

}  // namespace lc::vcsgs
