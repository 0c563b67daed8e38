#include "latentcycle/faithsim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

#include "latentcycle/error.hpp"
#include "latentcycle/graph.hpp"
#include "latentcycle/util.hpp"

namespace lc::faith {

FaithfulnessSummary summarize(const sem::LinearSem& sem, const FaithLimits& limits) {
    const auto& g = sem.graph();
    const int p = g.size();
    if (p > limits.max_vertices)
        fail(ErrorKind::resource, "faithfulness checks enumerate all 2^p conditioning sets; p = " + std::to_string(p) +
                                      " exceeds the cap of " + std::to_string(limits.max_vertices) +
                                      " (FaithLimits::max_vertices)");
    const Eigen::MatrixXd cov = sem::implied_covariance(sem);
    const std::size_t masks = std::size_t{1} << p;
    // rho[mask * p * p + a * p + b] = rho(a, b | mask \ {a, b})
    std::vector<double> rho(masks * p * p, 0.0);
    std::vector<int> members;
    for (std::size_t mask = 0; mask < masks; ++mask) {
        members.clear();
        for (int v = 0; v < p; ++v)
            if (mask >> v & 1) members.push_back(v);
        const int m = static_cast<int>(members.size());
        if (m < 2) continue;
        Eigen::MatrixXd sub(m, m);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) sub(a, b) = cov(members[a], members[b]);
        Eigen::LLT<Eigen::MatrixXd> llt(sub);
        if (llt.info() != Eigen::Success) fail(ErrorKind::numeric, "implied covariance is not positive definite");
        Eigen::MatrixXd P = llt.solve(Eigen::MatrixXd::Identity(m, m));
        for (int a = 0; a < m; ++a)
            for (int b = a + 1; b < m; ++b) {
                double r = -P(a, b) / std::sqrt(P(a, a) * P(b, b));
                rho[(mask * p + members[a]) * p + members[b]] = r;
                rho[(mask * p + members[b]) * p + members[a]] = r;
            }
    }
    auto at = [&](std::size_t mask, int a, int b) { return rho[(mask * p + a) * p + b]; };

    FaithfulnessSummary s;
    for (std::size_t mask = 0; mask < masks; ++mask)
        for (int a = 0; a < p; ++a) {
            if (!(mask >> a & 1)) continue;
            for (int b = a + 1; b < p; ++b) {
                if (!(mask >> b & 1)) continue;
                double r = std::abs(at(mask, a, b));
                if (r <= kZeroFloor || r >= s.sf_min) continue;
                std::vector<int> cond;
                for (int v = 0; v < p; ++v)
                    if ((mask >> v & 1) && v != a && v != b) cond.push_back(v);
                if (graph::d_separated(g, {a}, {b}, cond)) continue;
                s.sf_min = r;
            }
        }

    std::map<std::pair<int, int>, std::size_t> edge_index;
    auto edge_slot = [&](int x, int z) {
        auto key = std::minmax(x, z);
        auto it = edge_index.find(key);
        if (it != edge_index.end()) return it->second;
        TriangleEdge e;
        e.x = key.first;
        e.z = key.second;
        e.strength = std::abs(g.has_edge(x, z) ? sem.coefficients()(x, z) : sem.coefficients()(z, x));
        s.edges.push_back(e);
        edge_index[key] = s.edges.size() - 1;
        return s.edges.size() - 1;
    };
    for (const auto& t : graph::find_triangles(g)) {
        ++s.triangles;
        const int tri[3] = {t.x, t.y, t.z};
        for (int mid = 0; mid < 3; ++mid) {
            const int y = tri[mid], x = tri[(mid + 1) % 3], z = tri[(mid + 2) % 3];
            const bool collider = g.has_edge(x, y) && g.has_edge(z, y);
            TriangleEdge& e = s.edges[edge_slot(x, z)];
            const std::size_t pair_bits = (std::size_t{1} << x) | (std::size_t{1} << z);
            for (std::size_t w = 0; w < masks; ++w) {
                if (w & pair_bits) continue;
                if (static_cast<bool>(w >> y & 1) != collider) continue;
                double r = std::abs(at(w | pair_bits, x, z));
                double ratio = r / e.strength;
                e.min_ratio_raw = std::min(e.min_ratio_raw, ratio);
                if (r > kZeroFloor) e.min_ratio = std::min(e.min_ratio, ratio);
            }
        }
    }
    for (const auto& e : s.edges) {
        s.ktf_min = std::min(s.ktf_min, e.min_ratio);
        s.ktf_min_raw = std::min(s.ktf_min_raw, e.min_ratio_raw);
    }
    return s;
}

bool strong_faithfulness_violated(const sem::LinearSem& sem, double lambda) {
    require(lambda > 0 && lambda < 1, "lambda must lie in (0, 1)");
    return summarize(sem).sf_min <= lambda;
}

bool ktf_violated(const sem::LinearSem& sem, double k) {
    require(k > 0, "k must be > 0");
    return summarize(sem).ktf_min < k;
}

double max_satisfiable_k(const sem::LinearSem& sem) { return summarize(sem).ktf_min_raw; }

sem::LinearSem random_linear_gaussian(int p, double nb, std::uint64_t seed, double noise_var) {
    auto g = graph::random_dag(p, nb, util::mix_seed(seed, 0));
    return sem::random_sem(g, sem::CoefficientRegime::symmetric_unit, sem::NoiseSpec::gaussian(0, noise_var),
                           util::mix_seed(seed, 1));
}

std::vector<std::pair<int, double>> sweep_cells(const std::vector<int>& nodes, const std::vector<double>& nb_sizes) {
    std::vector<std::pair<int, double>> cells;
    for (int p : nodes) {
        require(p >= 1, "node counts must be >= 1");
        for (double nb : nb_sizes) {
            require(nb >= 0, "neighborhood sizes must be >= 0");
            double c = std::min(nb, static_cast<double>(std::max(0, p - 1)));
            if (std::find(cells.begin(), cells.end(), std::make_pair(p, c)) == cells.end()) cells.emplace_back(p, c);
        }
    }
    return cells;
}

namespace {

std::vector<FaithfulnessSummary> run_cell(int p, double nb, int n_graphs, std::uint64_t cell_seed, double noise_var) {
    require(n_graphs >= 1, "n_graphs must be >= 1");
    std::vector<FaithfulnessSummary> out(n_graphs);
    util::parallel_for(static_cast<std::size_t>(n_graphs), [&](std::size_t i) {
        out[i] = summarize(random_linear_gaussian(p, nb, util::mix_seed(cell_seed, i), noise_var));
    });
    return out;
}

std::uint64_t cell_seed(std::uint64_t seed, int p, double nb) {
    std::ostringstream key;
    key << p << ':' << nb;
    return util::mix_seed(seed, util::fnv1a64(key.str()));
}

std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(10) << v;
    return s.str();
}

}  // namespace

std::vector<SweepRow> violation_sweep(const SweepConfig& cfg) {
    std::vector<SweepRow> rows;
    for (auto [p, nb] : sweep_cells(cfg.nodes, cfg.nb_sizes)) {
        auto sums = run_cell(p, nb, cfg.n_graphs, cell_seed(cfg.seed, p, nb), cfg.noise_var);
        for (double th : cfg.thresholds) {
            require(th > 0 && th < 1, "thresholds must lie in (0, 1)");
            int sf = 0, ktf = 0;
            for (const auto& s : sums) {
                sf += s.sf_min <= th;
                ktf += s.ktf_min < th;
            }
            for (int which = 0; which < 2; ++which) {
                SweepRow r;
                r.p = p;
                r.nb = nb;
                r.threshold = th;
                r.assumption = which == 0 ? "strong" : "k_triangle";
                r.n_graphs = cfg.n_graphs;
                r.proportion = static_cast<double>(which == 0 ? sf : ktf) / cfg.n_graphs;
                r.stderr_ = std::sqrt(r.proportion * (1 - r.proportion) / cfg.n_graphs);
                rows.push_back(r);
            }
        }
    }
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream s;
    s << "p,nb,threshold,assumption,proportion,stderr,n_graphs\n";
    for (const auto& r : rows)
        s << r.p << ',' << fmt(r.nb) << ',' << fmt(r.threshold) << ',' << r.assumption << ',' << fmt(r.proportion)
          << ',' << fmt(r.stderr_) << ',' << r.n_graphs << '\n';
    return s.str();
}

std::vector<MaxKRow> max_k_study(const SweepConfig& cfg) {
    std::vector<MaxKRow> rows;
    for (auto [p, nb] : sweep_cells(cfg.nodes, cfg.nb_sizes)) {
        auto sums = run_cell(p, nb, cfg.n_graphs, cell_seed(cfg.seed, p, nb), cfg.noise_var);
        std::vector<double> ks;
        for (const auto& s : sums)
            if (s.triangles > 0) ks.push_back(s.ktf_min_raw);
        MaxKRow r;
        r.p = p;
        r.nb = nb;
        r.n_graphs = cfg.n_graphs;
        r.with_triangles = static_cast<int>(ks.size());
        if (!ks.empty()) {
            std::sort(ks.begin(), ks.end());
            r.min_k = ks.front();
            double sum = 0;
            for (double k : ks) sum += k;
            r.mean_k = sum / ks.size();
            r.median_k = ks.size() % 2 ? ks[ks.size() / 2] : 0.5 * (ks[ks.size() / 2 - 1] + ks[ks.size() / 2]);
        } else {
            r.min_k = r.mean_k = r.median_k = std::numeric_limits<double>::infinity();
        }
        rows.push_back(r);
    }
    return rows;
}

std::string max_k_csv(const std::vector<MaxKRow>& rows) {
    std::ostringstream s;
    s << "p,nb,n_graphs,with_triangles,min_k,mean_k,median_k\n";
    for (const auto& r : rows)
        s << r.p << ',' << fmt(r.nb) << ',' << r.n_graphs << ',' << r.with_triangles << ',' << fmt(r.min_k) << ','
          << fmt(r.mean_k) << ',' << fmt(r.median_k) << '\n';
    return s.str();
}

std::vector<ProfileRow> edge_strength_violation_profile(const ProfileConfig& cfg) {
    require(cfg.bins >= 1, "bins must be >= 1");
    require(cfg.k > 0, "k must be > 0");
    std::vector<ProfileRow> rows;
    for (auto [p, nb] : sweep_cells({cfg.p}, cfg.nb_sizes)) {
        auto sums = run_cell(p, nb, cfg.n_graphs, cell_seed(cfg.seed, p, nb), cfg.noise_var);
        std::vector<int> edges(cfg.bins, 0), viol(cfg.bins, 0);
        for (const auto& s : sums)
            for (const auto& e : s.edges) {
                int b = std::min(cfg.bins - 1, static_cast<int>(e.strength * cfg.bins));
                ++edges[b];
                viol[b] += e.min_ratio < cfg.k;
            }
        int total = 0;
        for (int v : viol) total += v;
        for (int b = 0; b < cfg.bins; ++b) {
            ProfileRow r;
            r.nb = nb;
            r.bin_lo = static_cast<double>(b) / cfg.bins;
            r.bin_hi = static_cast<double>(b + 1) / cfg.bins;
            r.edges = edges[b];
            r.violated = viol[b];
            r.proportion = edges[b] ? static_cast<double>(viol[b]) / edges[b] : 0.0;
            r.share = total ? static_cast<double>(viol[b]) / total : 0.0;
            rows.push_back(r);
        }
    }
    return rows;
}

std::string profile_csv(const std::vector<ProfileRow>& rows) {
    std::ostringstream s;
    s << "nb,bin_lo,bin_hi,edges,violated,proportion,share\n";
    for (const auto& r : rows)
        s << fmt(r.nb) << ',' << fmt(r.bin_lo) << ',' << fmt(r.bin_hi) << ',' << r.edges << ',' << r.violated << ','
          << fmt(r.proportion) << ',' << fmt(r.share) << '\n';
    return s.str();
}

}  // namespace lc::faith
