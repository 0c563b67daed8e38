#include "latentcycle/discovery.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <numeric>
#include <set>

#include "latentcycle/error.hpp"
#include "latentcycle/util.hpp"

namespace lc::discovery {

using util::set_minus;
using util::set_union;
using util::sorted_unique;

namespace {

std::string set_key(const Columns& c) {
    std::string s;
    for (int v : c) s += std::to_string(v) + ",";
    return s;
}

std::string set_text(const std::vector<std::string>& labels, const Columns& c) {
    std::string s = "{";
    for (std::size_t i = 0; i < c.size(); ++i) s += (i ? "," : "") + labels[c[i]];
    return s + "}";
}

void note(std::vector<std::string>* audit, const std::string& s) {
    if (audit) audit->push_back(s);
}

}  // namespace

int CausalOrder::stratum_of(int cluster) const {
    for (std::size_t s = 0; s < strata.size(); ++s)
        if (std::find(strata[s].begin(), strata[s].end(), cluster) != strata[s].end()) return static_cast<int>(s);
    return -1;
}

// ---- tester front end: canonical argument order and caching ----

bool Tester::rank_at_most(const Columns& A0, const Columns& B0, int r) {
    Columns A = sorted_unique(A0), B = sorted_unique(B0);
    if (A.empty() || B.empty() || r >= static_cast<int>(std::min(A.size(), B.size()))) return true;
    if (r < 0) return false;
    require(!util::intersects(A, B), "rank query needs disjoint column sets");
    if (B < A) std::swap(A, B);
    const std::string key = "r" + std::to_string(r) + ":" + set_key(A) + "|" + set_key(B);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    bool v = do_rank_at_most(A, B, r);
    cache_.emplace(key, v);
    return v;
}

int Tester::rank(const Columns& A, const Columns& B) {
    const int top = static_cast<int>(std::min(A.size(), B.size()));
    for (int r = 0; r < top; ++r)
        if (rank_at_most(A, B, r)) return r;
    return top;
}

bool Tester::gin(const Columns& Z0, const Columns& Y0) {
    Columns Z = sorted_unique(Z0), Y = sorted_unique(Y0);
    if (Z.empty() || Y.empty()) return true;
    require(!util::intersects(Z, Y), "GIN query needs disjoint Z and Y");
    const std::string key = "g:" + set_key(Z) + "|" + set_key(Y);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    bool v = do_gin(Z, Y);
    cache_.emplace(key, v);
    return v;
}

bool Tester::projection_independent(const Columns& Y0, const Columns& Z0, const Columns& W0) {
    Columns Y = sorted_unique(Y0), Z = sorted_unique(Z0), W = sorted_unique(W0);
    if (Y.empty() || W.empty()) return true;
    require(!util::intersects(Y, W) && !util::intersects(Y, Z), "projection query needs disjoint Y, Z and W");
    const std::string key = "p:" + set_key(Y) + "|" + set_key(Z) + "|" + set_key(W);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    bool v = do_projection_independent(Y, Z, W);
    cache_.emplace(key, v);
    return v;
}

// ---- oracle backend ----

namespace {

class OracleTester : public Tester {
public:
    OracleTester(const graph::DirectedGraph& g, std::uint64_t seed)
        : g_(g), obs_(g.observed()),
          sem_(sem::random_sem(g, sem::CoefficientRegime::moderate, sem::NoiseSpec::uniform(-1, 1), seed)) {
        for (int v : obs_) labels_.push_back(g.label(v));
        require(!obs_.empty(), "graph has no observed vertices");
    }
    const std::vector<std::string>& labels() const override { return labels_; }

protected:
    bool do_rank_at_most(const Columns& A, const Columns& B, int r) override {
        return graph::min_choke_size(g_, vs(A), vs(B)) <= r;
    }
    bool do_gin(const Columns& Z, const Columns& Y) override {
        // every null direction of Sigma_{Y,Z} must work, as in the data test: the one-sided choke
        // must also be the rank, otherwise part of the null space still carries Z's noise
        const int one_sided = graph::min_one_sided_choke(g_, vs(Z), vs(Y));
        return one_sided < static_cast<int>(Y.size()) && one_sided == graph::min_choke_size(g_, vs(Z), vs(Y));
    }
    bool do_projection_independent(const Columns& Y, const Columns& Z, const Columns& W) override {
        // rows of the mixing matrix: each observed value as a combination of all noise terms
        const Eigen::MatrixXd& M = sem_.mixing();
        auto rows = [&](const Columns& c) {
            Eigen::MatrixXd out(c.size(), M.cols());
            for (std::size_t i = 0; i < c.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = M.row(obs_[c[i]]);
            return out;
        };
        Eigen::MatrixXd my = rows(Y), mw = rows(W);
        Eigen::MatrixXd omega;
        if (Z.empty()) {
            omega = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(Y.size()), static_cast<Eigen::Index>(Y.size()));
        } else {
            Eigen::MatrixXd mz = rows(Z);
            Eigen::VectorXd var(M.cols());
            for (Eigen::Index j = 0; j < M.cols(); ++j) var(j) = sem_.noise()[j].cumulant(2);
            Eigen::MatrixXd cross = my * var.asDiagonal() * mz.transpose();
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(cross, Eigen::ComputeFullU);
            const double scale = std::sqrt((my * var.asDiagonal() * my.transpose()).diagonal().maxCoeff() *
                                           (mz * var.asDiagonal() * mz.transpose()).diagonal().maxCoeff());
            const int rk = stats::numeric_rank(cross, 1e-9, 1e-12 * scale);
            const Eigen::Index nul = static_cast<Eigen::Index>(Y.size()) - rk;
            if (nul <= 0) return false;
            omega = svd.matrixU().rightCols(nul);
        }
        Eigen::MatrixXd load = omega.transpose() * my;
        const double ty = 1e-8 * std::max(1.0, load.cwiseAbs().maxCoeff());
        const double tw = 1e-8 * std::max(1.0, mw.cwiseAbs().maxCoeff());
        for (Eigen::Index j = 0; j < M.cols(); ++j)
            if (load.col(j).cwiseAbs().maxCoeff() > ty && mw.col(j).cwiseAbs().maxCoeff() > tw) return false;
        return true;
    }

private:
    graph::VertexSet vs(const Columns& c) const {
        graph::VertexSet out;
        for (int i : c) out.push_back(obs_[i]);
        return out;
    }
    graph::DirectedGraph g_;
    std::vector<int> obs_;
    std::vector<std::string> labels_;
    sem::LinearSem sem_;
};

// ---- data backend ----

class DataTester : public Tester {
public:
    DataTester(const sem::Dataset& d, const DataTesterOptions& opt) : d_(d), opt_(opt) {
        require(d.rows() >= 10, "discovery needs at least 10 rows");
        centered_ = d.values.rowwise() - d.values.colwise().mean();
        cov_ = stats::sample_covariance(d.values);
    }
    const std::vector<std::string>& labels() const override { return d_.labels; }

protected:
    bool do_rank_at_most(const Columns& A, const Columns& B, int r) override {
        return stats::rank_test_sample_cov(cov_, d_.rows(), A, B, r, opt_.rank_alpha).independent();
    }
    bool do_gin(const Columns& Z, const Columns& Y) override {
        const std::uint64_t seed = util::mix_seed(opt_.seed, util::fnv1a64("gin:" + set_key(Z) + "|" + set_key(Y)));
        if (Y.size() == 1) return stats::hsic_test(cols(Y), cols(Z), opt_.alpha, seed, opt_.hsic).independent();
        return stats::gin_test(d_, Z, Y, opt_.alpha, seed, opt_.hsic).test.independent();
    }
    bool do_projection_independent(const Columns& Y, const Columns& Z, const Columns& W) override {
        const std::uint64_t seed = util::mix_seed(
            opt_.seed, util::fnv1a64("proj:" + set_key(Y) + "|" + set_key(Z) + "|" + set_key(W)));
        Eigen::MatrixXd y = cols(Y), w = cols(W);
        Eigen::MatrixXd omega;
        if (Z.empty()) {
            omega = Eigen::MatrixXd::Identity(y.cols(), y.cols());
        } else {
            Eigen::MatrixXd cross = y.transpose() * cols(Z) / static_cast<double>(d_.rows() - 1);
            omega = stats::gin_omega(cross);
        }
        double min_p = 1.0;
        for (Eigen::Index c = 0; c < omega.cols(); ++c) {
            Eigen::MatrixXd e = y * omega.col(c);
            auto t = stats::hsic_test(e, w, opt_.alpha, util::mix_seed(seed, static_cast<std::uint64_t>(c)), opt_.hsic);
            min_p = std::min(min_p, t.p_value);
        }
        return min_p * static_cast<double>(omega.cols()) > opt_.alpha;
    }

private:
    Eigen::MatrixXd cols(const Columns& c) const {
        Eigen::MatrixXd out(centered_.rows(), static_cast<Eigen::Index>(c.size()));
        for (std::size_t i = 0; i < c.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = centered_.col(c[i]);
        return out;
    }
    sem::Dataset d_;
    DataTesterOptions opt_;
    Eigen::MatrixXd centered_, cov_;
};

}  // namespace

std::unique_ptr<Tester> oracle_tester(const graph::DirectedGraph& g, std::uint64_t seed) {
    return std::make_unique<OracleTester>(g, seed);
}

std::unique_ptr<Tester> data_tester(const sem::Dataset& data, const DataTesterOptions& opt) {
    require(opt.alpha > 0 && opt.alpha < 1 && opt.rank_alpha > 0 && opt.rank_alpha < 1,
            "significance levels must lie in (0, 1)");
    return std::make_unique<DataTester>(data, opt);
}

// ---- stage 1: clusters ----

namespace {

std::vector<Columns> merge_overlapping(std::vector<Columns> sets) {
    std::vector<Columns> out;
    for (auto& s : sets) {
        Columns cur = s;
        for (bool grew = true; grew;) {
            grew = false;
            for (auto it = out.begin(); it != out.end();) {
                if (util::intersects(*it, cur)) {
                    cur = sorted_unique(set_union(cur, *it));
                    it = out.erase(it);
                    grew = true;
                } else {
                    ++it;
                }
            }
        }
        out.push_back(sorted_unique(cur));
    }
    std::sort(out.begin(), out.end());
    return out;
}

// floor/ceil of half the largest rank across a split of S
int split_latent_count(Tester& t, const Columns& S, LatentCountRule rule, int* max_rank = nullptr) {
    const int n = static_cast<int>(S.size());
    int best = 0;
    for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
        if (!(mask & 1u)) continue;  // each split once
        Columns a, b;
        for (int i = 0; i < n; ++i) (mask >> i & 1u ? a : b).push_back(S[i]);
        best = std::max(best, t.rank(a, b));
    }
    if (max_rank) *max_rank = best;
    const int half = rule == LatentCountRule::halve_down ? best / 2 : (best + 1) / 2;
    return std::max(1, half);
}

Columns all_columns(const Tester& t) {
    Columns all(t.size());
    std::iota(all.begin(), all.end(), 0);
    return all;
}

}  // namespace

std::vector<Cluster> find_causal_cyclic_clusters(Tester& t, const ClusterOptions& opt, std::vector<std::string>* audit) {
    const int p = t.size();
    require(p >= 4, "cluster search needs at least 4 observed columns");
    require(opt.max_cluster_size >= 2, "max cluster size must be >= 2");
    if (p > opt.max_vars)
        fail(ErrorKind::resource, "cluster search over " + std::to_string(p) + " columns exceeds the cap of " +
                                      std::to_string(opt.max_vars) + " (--max-vars)");
    const auto& L = t.labels();
    const Columns all = all_columns(t);
    Columns active = all;
    std::vector<Cluster> out;
    for (int k = 1; !active.empty() && static_cast<int>(active.size()) >= k + 1 && p >= 2 * k + 2 &&
                    k + 1 <= opt.max_cluster_size;
         ++k) {
        std::vector<Columns> found;
        util::for_each_combination(active, k + 1, [&](const std::vector<int>& S) {
            bool ok;
            try {
                ok = t.rank_at_most(S, set_minus(all, S), k);
            } catch (const Error& e) {
                fail(e.kind(), "cluster search at k=" + std::to_string(k) + ", subset " + set_text(L, S) + ": " +
                                   e.what());
            }
            if (ok) found.push_back(S);
            return true;
        });
        for (auto& m : merge_overlapping(found)) {
            Cluster c;
            c.members = m;
            c.latents = k;
            out.push_back(c);
            active = set_minus(active, m);
            note(audit, "cluster " + set_text(L, m) + " with " + std::to_string(k) + " latent(s)");
        }
    }
    std::sort(out.begin(), out.end(), [](const Cluster& a, const Cluster& b) { return a.members < b.members; });
    if (!opt.check_cycles) return out;
    for (auto& c : out) {
        const Columns rest = set_minus(all, c.members);
        bool ok;
        try {
            ok = t.gin(rest, c.members);
        } catch (const Error& e) {
            fail(e.kind(), "cycle check of cluster " + set_text(L, c.members) + ": " + e.what());
        }
        if (ok) continue;
        int mr = 0;
        c.cyclic = true;
        c.latents = split_latent_count(t, c.members, opt.rule, &mr);
        c.provenance = "GIN(rest, cluster) fails; largest split rank " + std::to_string(mr);
        note(audit, "cluster " + set_text(L, c.members) + " cyclic: " + c.provenance);
    }
    return out;
}

// ---- stage 2: root sets ----

namespace {

struct Halves {
    const std::vector<Cluster>& cl;
    Columns first(int c) const {
        const auto& m = cl[c].members;
        const std::size_t d = std::min<std::size_t>(cl[c].latents, m.size());
        return Columns(m.begin(), m.begin() + static_cast<std::ptrdiff_t>(d));
    }
    Columns second(int c) const {
        const auto& m = cl[c].members;
        const std::size_t d = static_cast<std::size_t>(cl[c].latents);
        if (m.size() <= d) return {};
        return Columns(m.begin() + static_cast<std::ptrdiff_t>(d),
                       m.begin() + static_cast<std::ptrdiff_t>(std::min(2 * d, m.size())));
    }
    bool can_lead(int c) const { return cl[c].members.size() >= 2 * static_cast<std::size_t>(cl[c].latents); }
    Columns firsts(const std::vector<int>& cs) const {
        Columns out;
        for (int c : cs) out = set_union(out, first(c));
        return sorted_unique(out);
    }
    Columns seconds(const std::vector<int>& cs) const {
        Columns out;
        for (int c : cs) out = set_union(out, second(c));
        return sorted_unique(out);
    }
    Columns children(const std::vector<int>& cs) const {
        Columns out;
        for (int c : cs) out = set_union(out, cl[c].members);
        return sorted_unique(out);
    }
    int latents(const std::vector<int>& cs) const {
        int s = 0;
        for (int c : cs) s += cl[c].latents;
        return s;
    }
};

// P is a (joint) root set of R given the earlier blocks T
bool is_root_set(Tester& t, const Halves& h, const std::vector<int>& P, const std::vector<int>& R,
                 const std::vector<int>& T) {
    for (int c : P)
        if (!h.can_lead(c)) return false;
    const Columns y0 = sorted_unique(set_union(h.firsts(P), h.firsts(T)));
    const Columns z = sorted_unique(set_union(h.seconds(P), h.seconds(T)));
    for (int k : R) {
        if (std::find(P.begin(), P.end(), k) != P.end()) continue;
        if (!t.gin(z, set_union(y0, h.first(k)))) return false;
    }
    return true;
}

std::string blocks_text(const std::vector<int>& cs) {
    std::string s = "[";
    for (std::size_t i = 0; i < cs.size(); ++i) s += (i ? "," : "") + std::string("c") + std::to_string(cs[i] + 1);
    return s + "]";
}

}  // namespace

CausalOrder learn_latent_causal_order(Tester& t, const std::vector<Cluster>& clusters, std::vector<std::string>* audit) {
    Halves h{clusters};
    std::vector<int> R, T;
    for (std::size_t c = 0; c < clusters.size(); ++c)
        if (!clusters[c].cyclic) R.push_back(static_cast<int>(c));
    CausalOrder K;
    while (!R.empty()) {
        if (R.size() == 1) {
            K.strata.push_back(R);
            break;
        }
        std::vector<int> roots;
        for (int r : R)
            if (is_root_set(t, h, {r}, R, T)) roots.push_back(r);
        if (roots.empty()) {
            note(audit, "no root among " + blocks_text(R) + "; tied into one stratum");
            K.strata.push_back(R);
            break;
        }
        K.strata.push_back(roots);
        T = sorted_unique(set_union(T, roots));
        R = set_minus(R, roots);
    }
    return K;
}

CausalOrder learn_order_for_cyclic_clusters(Tester& t, std::vector<Cluster>& clusters, CausalOrder K,
                                            const ClusterOptions& opt, std::vector<std::string>* audit) {
    const Columns all = all_columns(t);
    const auto& L = t.labels();
    std::vector<int> pending;
    for (std::size_t c = 0; c < clusters.size(); ++c)
        if (clusters[c].cyclic && K.stratum_of(static_cast<int>(c)) < 0) pending.push_back(static_cast<int>(c));

    // latest blocks: cycles that GIN cannot see show up as a rank deficit
    if (!K.strata.empty()) {
        for (int c : K.strata.back()) {
            auto& cl = clusters[c];
            const int r = t.rank(cl.members, set_minus(all, cl.members));
            if (r >= cl.latents) continue;
            int mr = 0;
            cl.cyclic = true;
            const int before = cl.latents;
            cl.latents = split_latent_count(t, cl.members, opt.rule, &mr);
            cl.provenance = "latest block: rank(cluster, rest) = " + std::to_string(r) + " < " +
                            std::to_string(before) + " latents; largest split rank " + std::to_string(mr);
            note(audit, "cluster " + set_text(L, cl.members) + " cyclic: " + cl.provenance);
        }
    }

    Halves h{clusters};
    for (int c : pending) {
        bool placed = false;
        for (int s = static_cast<int>(K.strata.size()) - 1; s >= 0 && !placed; --s) {
            std::vector<int> T;
            for (int e = 0; e < s; ++e)
                for (int b : K.strata[e])
                    if (!clusters[b].cyclic) T.push_back(b);
            T = sorted_unique(T);
            for (int r : K.strata[s]) {
                if (clusters[r].cyclic || !h.can_lead(r)) continue;
                const Columns y = sorted_unique(set_union(set_union(h.first(r), h.first(c)), h.firsts(T)));
                const Columns z = sorted_unique(set_union(h.second(r), h.seconds(T)));
                if (!t.gin(z, y)) continue;
                if (s + 1 == static_cast<int>(K.strata.size())) K.strata.emplace_back();
                K.strata[s + 1].push_back(c);
                std::sort(K.strata[s + 1].begin(), K.strata[s + 1].end());
                note(audit, "cyclic cluster c" + std::to_string(c + 1) + " placed after c" + std::to_string(r + 1));
                placed = true;
                break;
            }
        }
        if (!placed) {
            if (K.strata.empty()) K.strata.emplace_back();
            K.strata.front().push_back(c);
            std::sort(K.strata.front().begin(), K.strata.front().end());
            note(audit, "cyclic cluster c" + std::to_string(c + 1) + " not placed by any ruler; joins the first stratum");
        }
    }
    return K;
}

// ---- block cycles ----

namespace {

void dedupe_pairs(std::vector<std::pair<std::vector<int>, std::vector<int>>>& v) {
    for (auto& [a, b] : v) {
        a = sorted_unique(a);
        b = sorted_unique(b);
        if (b < a) std::swap(a, b);
    }
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

BlockPairs find_cycles_rec(Tester& t, const Halves& h, const std::vector<int>& C, const std::vector<int>& B) {
    BlockPairs out;
    const int n = static_cast<int>(C.size());
    if (n < 2) return out;
    const Columns xb = h.children(B);
    const Columns zb = h.seconds(B);
    std::vector<std::pair<std::vector<int>, std::vector<int>>> level;
    for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
        if (!(mask & 1u)) continue;
        std::vector<int> c1, c2;
        for (int i = 0; i < n; ++i) (mask >> i & 1u ? c1 : c2).push_back(C[i]);
        const int bound = std::min(h.latents(c1), h.latents(c2));
        if (!t.rank_at_most(xb, set_union(h.children(c1), h.children(c2)), bound - 1)) continue;
        const bool ind12 = t.projection_independent(h.firsts(c1), zb, h.firsts(c2));
        const bool ind21 = t.projection_independent(h.firsts(c2), zb, h.firsts(c1));
        if (ind12 && ind21) {
            out.noncyclic.emplace_back(c1, c2);
            for (const auto* half : {&c1, &c2}) {
                BlockPairs sub = find_cycles_rec(t, h, *half, B);
                out.noncyclic.insert(out.noncyclic.end(), sub.noncyclic.begin(), sub.noncyclic.end());
                out.cyclic.insert(out.cyclic.end(), sub.cyclic.begin(), sub.cyclic.end());
            }
        } else if (!ind12 && !ind21) {
            level.emplace_back(c1, c2);
        }
    }
    dedupe_pairs(out.noncyclic);
    // pruning applies to the pairs found at this level only
    for (auto [a2, b2] : level) {
        for (const auto& [a1, b1] : out.noncyclic) {
            a2 = set_minus(a2, a1);
            b2 = set_minus(b2, b1);
            a2 = set_minus(a2, b1);
            b2 = set_minus(b2, a1);
        }
        if (!a2.empty() && !b2.empty()) out.cyclic.emplace_back(a2, b2);
    }
    dedupe_pairs(out.cyclic);
    return out;
}

std::vector<std::vector<int>> merge_groups(const std::vector<std::pair<std::vector<int>, std::vector<int>>>& pairs) {
    std::vector<Columns> sets;
    for (const auto& [a, b] : pairs) sets.push_back(sorted_unique(set_union(a, b)));
    return merge_overlapping(sets);
}

}  // namespace

BlockPairs find_cycles_between_blocks(Tester& t, const std::vector<Cluster>& clusters, const std::vector<int>& C,
                                      const std::vector<int>& B, const BlockCycleOptions& opt) {
    for (int c : set_union(C, B))
        require(c >= 0 && c < static_cast<int>(clusters.size()), "block index out of range");
    require(!util::intersects(C, B), "C and B must be disjoint");
    if (static_cast<int>(C.size()) > opt.max_blocks)
        fail(ErrorKind::resource, "block-cycle search over " + std::to_string(C.size()) +
                                      " blocks enumerates 2^|C| bipartitions; cap is " +
                                      std::to_string(opt.max_blocks) + " (--max-blocks)");
    Halves h{clusters};
    BlockPairs out = find_cycles_rec(t, h, sorted_unique(C), sorted_unique(B));
    out.groups = merge_groups(out.cyclic);
    return out;
}

CausalOrder learn_order_between_latents(Tester& t, const std::vector<Cluster>& clusters, const BlockCycleOptions& opt,
                                        std::vector<std::string>* audit) {
    Halves h{clusters};
    std::vector<int> R(clusters.size()), T;
    std::iota(R.begin(), R.end(), 0);
    CausalOrder K;
    while (!R.empty()) {
        std::vector<int> roots;
        int k = 0;
        while (roots.empty() && k < static_cast<int>(R.size())) {
            ++k;
            util::for_each_combination(R, k, [&](const std::vector<int>& P) {
                if (is_root_set(t, h, P, R, T)) roots = set_union(roots, P);
                return true;
            });
        }
        if (roots.empty()) {
            note(audit, "no root set among " + blocks_text(R) + "; tied into one stratum");
            K.strata.push_back(R);
            break;
        }
        roots = sorted_unique(roots);
        if (roots.size() > 1 && k > 1) {
            BlockPairs bp = find_cycles_between_blocks(t, clusters, roots, T, opt);
            for (auto& g : bp.groups) {
                K.block_cycles.push_back(g);
                note(audit, "block cycle among " + blocks_text(g));
            }
        }
        K.strata.push_back(roots);
        T = sorted_unique(set_union(T, roots));
        R = set_minus(R, roots);
    }
    return K;
}

DiscoveryResult discover_cyclic_clusters(Tester& t, const ClusterOptions& opt) {
    DiscoveryResult r;
    r.labels = t.labels();
    r.clusters = find_causal_cyclic_clusters(t, opt, &r.audit);
    CausalOrder K = learn_latent_causal_order(t, r.clusters, &r.audit);
    r.order = learn_order_for_cyclic_clusters(t, r.clusters, K, opt, &r.audit);
    return r;
}

DiscoveryResult discover_block_cycles(Tester& t, const ClusterOptions& copt, const BlockCycleOptions& bopt) {
    DiscoveryResult r;
    r.labels = t.labels();
    r.clusters = find_causal_cyclic_clusters(t, copt, &r.audit);
    r.order = learn_order_between_latents(t, r.clusters, bopt, &r.audit);
    return r;
}

// ---- ground truth and metrics ----

namespace {

struct TrueRelations {
    DiscoveryResult result;
    std::vector<std::vector<char>> earlier;  // cluster x cluster
};

TrueRelations truth_of(const graph::DirectedGraph& g) {
    TrueRelations tr;
    auto& res = tr.result;
    const auto obs = g.observed();
    for (int v : obs) res.labels.push_back(g.label(v));
    std::map<std::vector<int>, Columns> by_parents;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        std::vector<int> lp;
        for (int p : g.parents(obs[i]))
            if (g.is_latent(p)) lp.push_back(p);
        if (!lp.empty()) by_parents[sorted_unique(lp)].push_back(static_cast<int>(i));
    }
    std::vector<std::vector<int>> blocks;
    for (auto& [lp, members] : by_parents) {
        Cluster c;
        c.members = members;
        c.latents = static_cast<int>(lp.size());
        for (int m : members)
            for (int l : lp)
                if (g.has_edge(obs[m], l)) c.cyclic = true;
        if (c.cyclic) c.provenance = "true graph: a member has an edge into the latent parents";
        res.clusters.push_back(c);
        blocks.push_back(lp);
    }
    // stable cluster numbering by first member
    std::vector<std::size_t> idx(res.clusters.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return res.clusters[a].members < res.clusters[b].members; });
    std::vector<Cluster> cl;
    std::vector<std::vector<int>> bl;
    for (auto i : idx) {
        cl.push_back(res.clusters[i]);
        bl.push_back(blocks[i]);
    }
    res.clusters = cl;
    blocks = bl;

    // latent-only reachability
    const int n = g.size();
    std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
    for (int s = 0; s < n; ++s) {
        if (!g.is_latent(s)) continue;
        std::vector<int> stack{s};
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int c : g.children(u))
                if (g.is_latent(c) && !reach[s][c]) {
                    reach[s][c] = 1;
                    stack.push_back(c);
                }
        }
    }
    const int m = static_cast<int>(blocks.size());
    std::vector<std::vector<char>> reaches(m, std::vector<char>(m, 0));
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            if (a != b)
                for (int x : blocks[a])
                    for (int y : blocks[b])
                        if (reach[x][y]) reaches[a][b] = 1;
    tr.earlier.assign(m, std::vector<char>(m, 0));
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) tr.earlier[a][b] = reaches[a][b] && !reaches[b][a];

    // strata: longest chain of strict precedence; mutually reaching blocks form block-cycle groups
    std::vector<int> level(m, 0);
    for (int it = 0; it < m; ++it)
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b)
                if (tr.earlier[a][b]) level[b] = std::max(level[b], level[a] + 1);
    const int top = m ? *std::max_element(level.begin(), level.end()) : -1;
    res.order.strata.assign(top + 1, {});
    for (int a = 0; a < m; ++a) res.order.strata[level[a]].push_back(a);
    std::vector<Columns> pairs;
    for (int a = 0; a < m; ++a)
        for (int b = a + 1; b < m; ++b)
            if (reaches[a][b] && reaches[b][a]) pairs.push_back({a, b});
    res.order.block_cycles = merge_overlapping(pairs);
    return tr;
}

double ratio(double num, double den, const char* name, std::vector<std::string>& undefined) {
    if (den == 0) {
        undefined.push_back(name);
        return 1.0;
    }
    return num / den;
}

DiscoveryMetrics compare(const DiscoveryResult& found, const DiscoveryResult& truth,
                         const std::vector<std::vector<char>>& true_earlier) {
    // align found columns to truth columns by label
    const int p = static_cast<int>(truth.labels.size());
    std::vector<int> f_cluster(p, -1), t_cluster(p, -1);
    for (std::size_t c = 0; c < truth.clusters.size(); ++c)
        for (int m : truth.clusters[c].members) t_cluster[m] = static_cast<int>(c);
    for (std::size_t c = 0; c < found.clusters.size(); ++c)
        for (int m : found.clusters[c].members) {
            const auto& lab = found.labels.at(m);
            auto it = std::find(truth.labels.begin(), truth.labels.end(), lab);
            require(it != truth.labels.end(), "found column '" + lab + "' is not an observed variable of the truth");
            f_cluster[it - truth.labels.begin()] = static_cast<int>(c);
        }
    double both = 0, t_same = 0, f_same = 0;
    double co_both = 0, co_t = 0, co_f = 0;
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) {
            if (i == j) continue;
            const bool ts = t_cluster[i] >= 0 && t_cluster[i] == t_cluster[j];
            const bool fs = f_cluster[i] >= 0 && f_cluster[i] == f_cluster[j];
            if (i < j) {
                t_same += ts;
                f_same += fs;
                both += ts && fs;
            }
            const bool te = t_cluster[i] >= 0 && t_cluster[j] >= 0 && t_cluster[i] != t_cluster[j] &&
                            true_earlier[t_cluster[i]][t_cluster[j]];
            bool fe = false;
            if (f_cluster[i] >= 0 && f_cluster[j] >= 0) {
                const int si = found.order.stratum_of(f_cluster[i]), sj = found.order.stratum_of(f_cluster[j]);
                fe = si >= 0 && sj >= 0 && si < sj;
            }
            co_t += te;
            co_f += fe;
            co_both += te && fe;
        }
    double cyc_both = 0, cyc_t = 0, cyc_f = 0;
    for (int i = 0; i < p; ++i) {
        const bool tc = t_cluster[i] >= 0 && truth.clusters[t_cluster[i]].cyclic;
        const bool fc = f_cluster[i] >= 0 && found.clusters[f_cluster[i]].cyclic;
        cyc_t += tc;
        cyc_f += fc;
        cyc_both += tc && fc;
    }
    DiscoveryMetrics m;
    m.cluster_recall = ratio(both, t_same, "cluster_recall", m.undefined);
    m.cluster_precision = ratio(both, f_same, "cluster_precision", m.undefined);
    m.latent_order_recall = ratio(co_both, co_t, "latent_order_recall", m.undefined);
    m.latent_order_precision = ratio(co_both, co_f, "latent_order_precision", m.undefined);
    m.cyclic_recall = ratio(cyc_both, cyc_t, "cyclic_recall", m.undefined);
    m.cyclic_precision = ratio(cyc_both, cyc_f, "cyclic_precision", m.undefined);
    return m;
}

}  // namespace

DiscoveryResult true_structure(const graph::DirectedGraph& g) { return truth_of(g).result; }

DiscoveryMetrics evaluate(const DiscoveryResult& found, const graph::DirectedGraph& truth) {
    TrueRelations tr = truth_of(truth);
    return compare(found, tr.result, tr.earlier);
}

DiscoveryMetrics evaluate(const DiscoveryResult& found, const DiscoveryResult& truth) {
    const int m = static_cast<int>(truth.clusters.size());
    std::vector<std::vector<char>> earlier(m, std::vector<char>(m, 0));
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
            const int sa = truth.order.stratum_of(a), sb = truth.order.stratum_of(b);
            earlier[a][b] = sa >= 0 && sb >= 0 && sa < sb;
        }
    return compare(found, truth, earlier);
}

// ---- JSON ----

std::string block_name(const DiscoveryResult&, int cluster) { return "L(c" + std::to_string(cluster + 1) + ")"; }

nlohmann::json result_to_json(const DiscoveryResult& r) {
    nlohmann::json clusters = nlohmann::json::array(), order = nlohmann::json::array(),
                   cycles = nlohmann::json::array();
    for (const auto& c : r.clusters) {
        std::vector<std::string> names;
        for (int m : c.members) names.push_back(r.labels.at(m));
        nlohmann::json j{{"members", names}, {"latents", c.latents}, {"cyclic", c.cyclic}};
        if (!c.provenance.empty()) j["provenance"] = c.provenance;
        clusters.push_back(j);
    }
    for (const auto& s : r.order.strata) {
        nlohmann::json st = nlohmann::json::array();
        for (int c : s) st.push_back(block_name(r, c));
        order.push_back(st);
    }
    for (const auto& g : r.order.block_cycles) {
        nlohmann::json st = nlohmann::json::array();
        for (int c : g) st.push_back(block_name(r, c));
        cycles.push_back(st);
    }
    return {{"clusters", clusters}, {"order", order}, {"block_cycles", cycles}};
}

DiscoveryResult result_from_json(const nlohmann::json& j) {
    DiscoveryResult r;
    require(j.is_object() && j.contains("clusters"), "cluster JSON needs a 'clusters' array");
    std::map<std::string, int> col;
    auto column = [&](const std::string& s) {
        auto it = col.find(s);
        if (it != col.end()) return it->second;
        const int id = static_cast<int>(r.labels.size());
        r.labels.push_back(s);
        col[s] = id;
        return id;
    };
    for (const auto& c : j.at("clusters")) {
        Cluster cl;
        for (const auto& m : c.at("members")) cl.members.push_back(column(m.get<std::string>()));
        require(!cl.members.empty(), "cluster members must be nonempty");
        cl.members = sorted_unique(cl.members);
        cl.latents = c.value("latents", 1);
        require(cl.latents >= 1, "cluster latent count must be >= 1");
        cl.cyclic = c.value("cyclic", false);
        cl.provenance = c.value("provenance", std::string());
        r.clusters.push_back(cl);
    }
    auto block = [&](const nlohmann::json& s) {
        const std::string name = s.get<std::string>();
        require(name.size() > 4 && name.rfind("L(c", 0) == 0 && name.back() == ')', "bad block name '" + name + "'");
        const int id = std::stoi(name.substr(3, name.size() - 4)) - 1;
        require(id >= 0 && id < static_cast<int>(r.clusters.size()), "block '" + name + "' names no cluster");
        return id;
    };
    if (j.contains("order"))
        for (const auto& s : j.at("order")) {
            std::vector<int> st;
            for (const auto& b : s) st.push_back(block(b));
            r.order.strata.push_back(sorted_unique(st));
        }
    if (j.contains("block_cycles"))
        for (const auto& s : j.at("block_cycles")) {
            std::vector<int> g;
            for (const auto& b : s) g.push_back(block(b));
            r.order.block_cycles.push_back(sorted_unique(g));
        }
    std::set<int> seen;
    for (const auto& s : r.order.strata)
        for (int b : s) require(seen.insert(b).second, "a block appears in two strata");
    return r;
}

nlohmann::json metrics_to_json(const DiscoveryMetrics& m) {
    return {{"cluster_recall", m.cluster_recall},
            {"cluster_precision", m.cluster_precision},
            {"latent_order_recall", m.latent_order_recall},
            {"latent_order_precision", m.latent_order_precision},
            {"cyclic_recall", m.cyclic_recall},
            {"cyclic_precision", m.cyclic_precision},
            {"undefined_ratios", m.undefined}};
}

}  // namespace lc::discovery
