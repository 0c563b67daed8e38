#include "latentcycle/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numeric>
#include <random>

#include "latentcycle/error.hpp"
#include "latentcycle/util.hpp"

namespace lc::stats {

TestResult make_result(double statistic, double p_value, double alpha) {
    TestResult r;
    r.statistic = statistic;
    r.p_value = std::clamp(p_value, 0.0, 1.0);
    r.decision = r.p_value > alpha ? Decision::independent : Decision::dependent;
    return r;
}

double normal_two_sided_p(double z) {
    boost::math::normal_distribution<double> nd;
    return 2.0 * boost::math::cdf(boost::math::complement(nd, std::abs(z)));
}

double chi2_upper_p(double x, double df) {
    if (!(x > 0)) return 1.0;
    if (!std::isfinite(x)) return 0.0;
    boost::math::chi_squared_distribution<double> cd(df);
    return boost::math::cdf(boost::math::complement(cd, x));
}

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& x) {
    require(x.rows() >= 2, "covariance needs at least 2 rows");
    Eigen::MatrixXd c = x.rowwise() - x.colwise().mean();
    return (c.transpose() * c) / static_cast<double>(x.rows() - 1);
}

TestResult fisher_z_from_partial(double r, int n, int cond_size, double alpha) {
    require(n > cond_size + 3, "Fisher z test needs n > |S| + 3");
    if (std::abs(r) >= 1.0) {
        TestResult t = make_result(std::numeric_limits<double>::infinity(), 0.0, alpha);
        t.note = "perfect partial correlation";
        return t;
    }
    double z = 0.5 * std::log((1.0 + r) / (1.0 - r));
    double stat = std::sqrt(static_cast<double>(n - cond_size - 3)) * std::abs(z);
    return make_result(stat, normal_two_sided_p(stat), alpha);
}

TestResult fisher_z_ci_test(const sem::Dataset& data, int i, int j, const std::vector<int>& S, double alpha) {
    std::vector<int> cols{i, j};
    cols.insert(cols.end(), S.begin(), S.end());
    Eigen::MatrixXd sub(data.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) {
        require(cols[c] >= 0 && cols[c] < data.cols(), "column index out of range");
        sub.col(static_cast<Eigen::Index>(c)) = data.values.col(cols[c]);
    }
    require(data.rows() > static_cast<int>(S.size()) + 3, "Fisher z test needs n > |S| + 3");
    Eigen::MatrixXd cov = sample_covariance(sub);
    std::vector<int> rest;
    for (std::size_t c = 2; c < cols.size(); ++c) rest.push_back(static_cast<int>(c));
    double r = sem::partial_correlation(cov, 0, 1, rest);
    return fisher_z_from_partial(r, data.rows(), static_cast<int>(S.size()), alpha);
}

// ---- histograms ----

int histogram_bins(int n, int d) {
    require(n >= 1 && d >= 1, "histogram needs n >= 1 and d >= 1");
    int m = static_cast<int>(std::floor(std::pow(static_cast<double>(n), 1.0 / (2.0 + d)) + 1e-9));
    return std::max(2, m);
}

int HistogramDensity::bin_of(int axis, double x) const {
    const int m = bins[axis];
    if (m <= 1 || hi[axis] <= lo[axis]) return 0;
    int b = static_cast<int>(std::floor((x - lo[axis]) / (hi[axis] - lo[axis]) * m));
    return std::clamp(b, 0, m - 1);
}

std::size_t HistogramDensity::flat(const std::vector<int>& cell) const {
    std::size_t off = 0;
    for (int a = 0; a < dims(); ++a) off = off * bins[a] + static_cast<std::size_t>(cell[a]);
    return off;
}

HistogramDensity histogram_estimate(const sem::Dataset& data, const std::vector<int>& dims,
                                    const std::vector<int>& bins) {
    require(!dims.empty(), "histogram needs at least one dimension");
    require(bins.size() == dims.size(), "one bin count per dimension is required");
    require(data.rows() >= 1, "histogram needs n >= 1");
    HistogramDensity h;
    h.n = data.rows();
    std::size_t cells = 1;
    for (std::size_t a = 0; a < dims.size(); ++a) {
        auto col = data.values.col(dims[a]);
        double lo = col.minCoeff(), hi = col.maxCoeff();
        int m = bins[a];
        require(m >= 1, "bin count must be >= 1");
        if (!(hi > lo)) {
            h.degenerate = true;
            m = 1;
        }
        h.bins.push_back(m);
        h.lo.push_back(lo);
        h.hi.push_back(hi);
        cells *= static_cast<std::size_t>(m);
    }
    h.mass.assign(cells, 0.0);
    std::vector<int> cell(dims.size());
    const double w = 1.0 / h.n;
    for (int r = 0; r < h.n; ++r) {
        for (std::size_t a = 0; a < dims.size(); ++a) cell[a] = h.bin_of(static_cast<int>(a), data.values(r, dims[a]));
        h.mass[h.flat(cell)] += w;
    }
    return h;
}

HistogramDensity histogram_estimate(const sem::Dataset& data, const std::vector<int>& dims) {
    int m = histogram_bins(std::max(1, data.rows()), static_cast<int>(dims.size()));
    return histogram_estimate(data, dims, std::vector<int>(dims.size(), m));
}

namespace {

// eps = sum |p(x,y,a) - p(x,a) p(y,a) / p(a)| from per-row bin indices
double l1_from_bins(const std::vector<int>& bx, const std::vector<int>& by, const std::vector<int>& ba, int mx, int my,
                    int ma) {
    const std::size_t n = bx.size();
    std::vector<double> pxya(static_cast<std::size_t>(mx) * my * ma, 0.0), pxa(static_cast<std::size_t>(mx) * ma, 0.0),
        pya(static_cast<std::size_t>(my) * ma, 0.0), pa(ma, 0.0);
    const double w = 1.0 / static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) {
        pxya[(static_cast<std::size_t>(ba[r]) * mx + bx[r]) * my + by[r]] += w;
        pxa[static_cast<std::size_t>(ba[r]) * mx + bx[r]] += w;
        pya[static_cast<std::size_t>(ba[r]) * my + by[r]] += w;
        pa[ba[r]] += w;
    }
    double eps = 0.0;
    for (int a = 0; a < ma; ++a) {
        if (pa[a] <= 0) continue;
        for (int x = 0; x < mx; ++x)
            for (int y = 0; y < my; ++y) {
                double joint = pxya[(static_cast<std::size_t>(a) * mx + x) * my + y];
                double prod = pxa[static_cast<std::size_t>(a) * mx + x] * pya[static_cast<std::size_t>(a) * my + y] / pa[a];
                eps += std::abs(joint - prod);
            }
    }
    return eps;
}

struct L1Bins {
    std::vector<int> bx, by, ba;
    int mx = 1, my = 1, ma = 1;
};

L1Bins l1_bins(const sem::Dataset& data, int x, int y, const std::vector<int>& A) {
    require(x != y, "l1_dependence needs distinct columns");
    for (int a : A) require(a != x && a != y, "conditioning columns must differ from x and y");
    std::vector<int> dims{x, y};
    dims.insert(dims.end(), A.begin(), A.end());
    HistogramDensity h = histogram_estimate(data, dims);
    L1Bins b;
    b.mx = h.bins[0];
    b.my = h.bins[1];
    for (std::size_t a = 2; a < dims.size(); ++a) b.ma *= h.bins[a];
    const int n = data.rows();
    b.bx.resize(n);
    b.by.resize(n);
    b.ba.resize(n);
    for (int r = 0; r < n; ++r) {
        b.bx[r] = h.bin_of(0, data.values(r, x));
        b.by[r] = h.bin_of(1, data.values(r, y));
        int off = 0;
        for (std::size_t a = 2; a < dims.size(); ++a)
            off = off * h.bins[a] + h.bin_of(static_cast<int>(a), data.values(r, dims[a]));
        b.ba[r] = off;
    }
    return b;
}

}  // namespace

double l1_dependence(const sem::Dataset& data, int x, int y, const std::vector<int>& A) {
    L1Bins b = l1_bins(data, x, y, A);
    return l1_from_bins(b.bx, b.by, b.ba, b.mx, b.my, b.ma);
}

TestResult l1_permutation_test(const sem::Dataset& data, int x, int y, const std::vector<int>& A, double alpha,
                               int n_perm, std::uint64_t seed) {
    require(n_perm >= 1, "n_perm must be >= 1");
    L1Bins b = l1_bins(data, x, y, A);
    const double obs = l1_from_bins(b.bx, b.by, b.ba, b.mx, b.my, b.ma);
    std::vector<std::vector<int>> groups(b.ma);
    for (std::size_t r = 0; r < b.ba.size(); ++r) groups[b.ba[r]].push_back(static_cast<int>(r));
    std::vector<char> exceed(n_perm, 0);
    util::parallel_for(static_cast<std::size_t>(n_perm), [&](std::size_t i) {
        std::mt19937_64 rng(util::mix_seed(seed, i));
        std::vector<int> px = b.bx;
        for (const auto& g : groups) {
            std::vector<int> vals;
            vals.reserve(g.size());
            for (int r : g) vals.push_back(b.bx[r]);
            std::shuffle(vals.begin(), vals.end(), rng);
            for (std::size_t k = 0; k < g.size(); ++k) px[g[k]] = vals[k];
        }
        exceed[i] = l1_from_bins(px, b.by, b.ba, b.mx, b.my, b.ma) >= obs - 1e-12;
    });
    int count = static_cast<int>(std::count(exceed.begin(), exceed.end(), 1));
    return make_result(obs, (1.0 + count) / (1.0 + n_perm), alpha);
}

// ---- HSIC ----

namespace {

double median_bandwidth(const Eigen::MatrixXd& x) {
    const Eigen::Index n = std::min<Eigen::Index>(x.rows(), 1000);
    std::vector<double> d2;
    d2.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double v = (x.row(i) - x.row(j)).squaredNorm();
            if (v > 0) d2.push_back(v);
        }
    if (d2.empty()) return 1.0;
    auto mid = d2.begin() + static_cast<std::ptrdiff_t>(d2.size() / 2);
    std::nth_element(d2.begin(), mid, d2.end());
    return std::sqrt(*mid);
}

Eigen::MatrixXd gram(const Eigen::MatrixXd& x, double sigma) {
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd k(n, n);
    const double s = 1.0 / (2.0 * sigma * sigma);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < n; ++j) k(i, j) = k(j, i) = std::exp(-(x.row(i) - x.row(j)).squaredNorm() * s);
    }
    return k;
}

// pivoted incomplete Cholesky of the Gaussian Gram matrix, K ~ G G^T
Eigen::MatrixXd incomplete_cholesky(const Eigen::MatrixXd& x, double sigma, double tol, int max_rank) {
    const Eigen::Index n = x.rows();
    const double s = 1.0 / (2.0 * sigma * sigma);
    Eigen::VectorXd d = Eigen::VectorXd::Ones(n);
    Eigen::MatrixXd G(n, std::min<Eigen::Index>(n, max_rank));
    int r = 0;
    for (; r < G.cols(); ++r) {
        Eigen::Index piv;
        double dmax = d.maxCoeff(&piv);
        if (dmax < tol) break;
        double root = std::sqrt(dmax);
        for (Eigen::Index i = 0; i < n; ++i) {
            double kij = std::exp(-(x.row(i) - x.row(piv)).squaredNorm() * s);
            double acc = kij;
            if (r > 0) acc -= G.row(i).head(r).dot(G.row(piv).head(r));
            G(i, r) = acc / root;
        }
        d -= G.col(r).cwiseAbs2();
        d(piv) = 0.0;
    }
    return G.leftCols(r);
}

bool has_zero_variance(const Eigen::MatrixXd& x) {
    for (Eigen::Index c = 0; c < x.cols(); ++c)
        if (!(x.col(c).maxCoeff() > x.col(c).minCoeff())) return true;
    return false;
}

}  // namespace

double hsic_statistic(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v) {
    require(u.rows() == v.rows() && u.rows() >= 2, "HSIC inputs need the same number of rows (>= 2)");
    const double n = static_cast<double>(u.rows());
    Eigen::MatrixXd K = gram(u, median_bandwidth(u));
    Eigen::MatrixXd L = gram(v, median_bandwidth(v));
    Eigen::MatrixXd Kc = K.rowwise() - K.colwise().mean();
    Kc = Kc.colwise() - Kc.rowwise().mean();
    return (Kc.cwiseProduct(L)).sum() / (n * n);
}

TestResult hsic_test(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v, double alpha, std::uint64_t seed,
                     const HsicOptions& opt) {
    require(u.rows() == v.rows(), "HSIC inputs need the same number of rows");
    require(u.rows() >= 20, "HSIC test needs n >= 20");
    require(opt.n_perm >= 1, "n_perm must be >= 1");
    if (has_zero_variance(u) || has_zero_variance(v)) {
        TestResult t = make_result(0.0, 0.0, alpha);
        t.degenerate = true;
        t.note = "zero-variance input; reported as dependent";
        return t;
    }
    const Eigen::Index n = u.rows();
    const double nn = static_cast<double>(n) * static_cast<double>(n);
    const double su = median_bandwidth(u), sv = median_bandwidth(v);
    std::vector<double> perm_stat(opt.n_perm);
    double obs = 0.0;
    auto permutation = [&](std::size_t i) {
        std::mt19937_64 rng(util::mix_seed(seed, i));
        std::vector<int> pi(n);
        std::iota(pi.begin(), pi.end(), 0);
        std::shuffle(pi.begin(), pi.end(), rng);
        return pi;
    };
    if (n <= opt.exact_limit) {
        Eigen::MatrixXd K = gram(u, su), L = gram(v, sv);
        Eigen::MatrixXd Kc = K.rowwise() - K.colwise().mean();
        Kc = Kc.colwise() - Kc.rowwise().mean();
        obs = Kc.cwiseProduct(L).sum() / nn;
        util::parallel_for(perm_stat.size(), [&](std::size_t i) {
            auto pi = permutation(i);
            double s = 0.0;
            for (Eigen::Index b = 0; b < n; ++b) {
                const double* lcol = L.col(pi[b]).data();
                const double* kcol = Kc.col(b).data();
                for (Eigen::Index a = 0; a < n; ++a) s += kcol[a] * lcol[pi[a]];
            }
            perm_stat[i] = s / nn;
        });
    } else {
        Eigen::MatrixXd G = incomplete_cholesky(u, su, opt.cholesky_tol, opt.max_rank);
        Eigen::MatrixXd F = incomplete_cholesky(v, sv, opt.cholesky_tol, opt.max_rank);
        Eigen::MatrixXd Gc = G.rowwise() - G.colwise().mean();
        obs = (Gc.transpose() * F).squaredNorm() / nn;
        util::parallel_for(perm_stat.size(), [&](std::size_t i) {
            auto pi = permutation(i);
            Eigen::MatrixXd Fp(n, F.cols());
            for (Eigen::Index a = 0; a < n; ++a) Fp.row(a) = F.row(pi[a]);
            perm_stat[i] = (Gc.transpose() * Fp).squaredNorm() / nn;
        });
    }
    int count = 0;
    for (double s : perm_stat) count += s >= obs;
    return make_result(obs, (1.0 + count) / (1.0 + opt.n_perm), alpha);
}

// ---- cumulants ----

double sample_cumulant(const std::vector<Eigen::VectorXd>& cols) {
    const int k = static_cast<int>(cols.size());
    require(k >= 2 && k <= 4, "sample cumulants are supported for k in {2,3,4}");
    const Eigen::Index n = cols[0].size();
    require(n >= 1, "sample cumulant needs at least one row");
    std::vector<Eigen::VectorXd> c;
    for (const auto& x : cols) {
        require(x.size() == n, "columns must have equal length");
        c.push_back(x.array() - x.mean());
    }
    auto m = [&](std::initializer_list<int> ids) {
        Eigen::ArrayXd prod = Eigen::ArrayXd::Ones(n);
        for (int i : ids) prod *= c[i].array();
        return prod.mean();
    };
    if (k == 2) return m({0, 1});
    if (k == 3) return m({0, 1, 2});
    return m({0, 1, 2, 3}) - m({0, 1}) * m({2, 3}) - m({0, 2}) * m({1, 3}) - m({0, 3}) * m({1, 2});
}

double sample_cumulant(const sem::Dataset& data, const std::vector<int>& indices) {
    std::vector<Eigen::VectorXd> cols;
    for (int i : indices) {
        require(i >= 0 && i < data.cols(), "column index out of range");
        cols.push_back(data.values.col(i));
    }
    return sample_cumulant(cols);
}

// ---- rank ----

int numeric_rank(const Eigen::MatrixXd& m, double rel_tol, double abs_floor) {
    if (m.size() == 0) return 0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) r += s(i) >= rel_tol * s(0) && s(i) >= abs_floor;
    return r;
}

namespace {

Eigen::MatrixXd block(const Eigen::MatrixXd& cov, const std::vector<int>& A, const std::vector<int>& B) {
    Eigen::MatrixXd out(A.size(), B.size());
    for (std::size_t a = 0; a < A.size(); ++a)
        for (std::size_t b = 0; b < B.size(); ++b) out(a, b) = cov(A[a], B[b]);
    return out;
}

void check_rank_args(const std::vector<int>& A, const std::vector<int>& B, int r) {
    require(!A.empty() && !B.empty(), "rank test needs nonempty A and B");
    require(r >= 0, "rank bound r must be >= 0");
}

std::vector<double> canonical_correlations(const Eigen::MatrixXd& saa, const Eigen::MatrixXd& sab,
                                           const Eigen::MatrixXd& sbb) {
    Eigen::LLT<Eigen::MatrixXd> la(saa), lb(sbb);
    if (la.info() != Eigen::Success || lb.info() != Eigen::Success)
        fail(ErrorKind::numeric, "rank test: covariance block is not positive definite");
    Eigen::MatrixXd m = la.matrixL().solve(sab);
    m = lb.matrixL().solve(m.transpose()).transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    std::vector<double> rho;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        rho.push_back(std::min(svd.singularValues()(i), 1.0 - 1e-15));
    return rho;
}

double bartlett(const std::vector<double>& rho, int n, int p, int q, int r) {
    double s = 0.0;
    for (std::size_t i = static_cast<std::size_t>(r); i < rho.size(); ++i) s += std::log(1.0 - rho[i] * rho[i]);
    return -(n - (p + q + 3) / 2.0) * s;
}

}  // namespace

TestResult rank_test_population(const Eigen::MatrixXd& cov, const std::vector<int>& A, const std::vector<int>& B,
                                int r, double rel_tol) {
    check_rank_args(A, B, r);
    Eigen::MatrixXd m = block(cov, A, B);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& s = svd.singularValues();
    // a structurally zero block holds only roundoff, so it is also measured against the variances
    double scale = 0.0;
    for (int a : A)
        for (int b : B) scale = std::max(scale, std::sqrt(std::abs(cov(a, a) * cov(b, b))));
    TestResult t;
    double ratio = 0.0;
    if (r < s.size() && s(0) > 0) ratio = s(r) / s(0);
    t.statistic = ratio;
    bool ok = ratio < rel_tol || (r < s.size() && s(r) < 1e-12 * scale);
    t.p_value = ok ? 1.0 : 0.0;
    t.decision = ok ? Decision::independent : Decision::dependent;
    return t;
}

TestResult rank_test_sample_cov(const Eigen::MatrixXd& cov, int n, const std::vector<int>& A,
                                const std::vector<int>& B, int r, double alpha) {
    check_rank_args(A, B, r);
    const int p = static_cast<int>(A.size()), q = static_cast<int>(B.size());
    if (r >= std::min(p, q)) return make_result(0.0, 1.0, alpha);
    auto rho = canonical_correlations(block(cov, A, A), block(cov, A, B), block(cov, B, B));
    double stat = bartlett(rho, n, p, q, r);
    return make_result(stat, chi2_upper_p(stat, static_cast<double>((p - r) * (q - r))), alpha);
}

TestResult rank_test_sample(const sem::Dataset& data, const std::vector<int>& A, const std::vector<int>& B, int r,
                            double alpha, const RankSampleOptions& opt) {
    check_rank_args(A, B, r);
    const int n = data.rows();
    Eigen::MatrixXd cov = sample_covariance(data.values);
    TestResult t = rank_test_sample_cov(cov, n, A, B, r, alpha);
    const int p = static_cast<int>(A.size()), q = static_cast<int>(B.size());
    if (!opt.bootstrap || r >= std::min(p, q)) return t;

    // parametric bootstrap under the rank-r truncated canonical model
    Eigen::MatrixXd saa = block(cov, A, A), sbb = block(cov, B, B), sab = block(cov, A, B);
    Eigen::LLT<Eigen::MatrixXd> la(saa), lb(sbb);
    Eigen::MatrixXd La = la.matrixL(), Lb = lb.matrixL();
    Eigen::MatrixXd m = La.triangularView<Eigen::Lower>().solve(sab);
    m = Lb.triangularView<Eigen::Lower>().solve(m.transpose()).transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(p, q);
    for (int i = 0; i < r; ++i) D(i, i) = svd.singularValues()(i);
    Eigen::MatrixXd sab0 = La * svd.matrixU() * D * svd.matrixV().transpose() * Lb.transpose();
    Eigen::MatrixXd s0(p + q, p + q);
    s0 << saa, sab0, sab0.transpose(), sbb;
    Eigen::LLT<Eigen::MatrixXd> l0(s0);
    if (l0.info() != Eigen::Success) fail(ErrorKind::numeric, "bootstrap null covariance is not positive definite");
    Eigen::MatrixXd L0 = l0.matrixL();
    std::vector<int> a(p), b(q);
    std::iota(a.begin(), a.end(), 0);
    std::iota(b.begin(), b.end(), p);
    std::vector<char> exceed(opt.n_boot, 0);
    util::parallel_for(static_cast<std::size_t>(opt.n_boot), [&](std::size_t i) {
        std::mt19937_64 rng(util::mix_seed(opt.seed, i));
        std::normal_distribution<double> nd;
        Eigen::MatrixXd z(n, p + q);
        for (int rr = 0; rr < n; ++rr)
            for (int c = 0; c < p + q; ++c) z(rr, c) = nd(rng);
        Eigen::MatrixXd x = z * L0.transpose();
        Eigen::MatrixXd c = sample_covariance(x);
        auto rho = canonical_correlations(block(c, a, a), block(c, a, b), block(c, b, b));
        exceed[i] = bartlett(rho, n, p, q, r) >= t.statistic;
    });
    int count = static_cast<int>(std::count(exceed.begin(), exceed.end(), 1));
    TestResult out = make_result(t.statistic, (1.0 + count) / (1.0 + opt.n_boot), alpha);
    out.note = "parametric bootstrap";
    return out;
}

// ---- GIN / IN ----

Eigen::MatrixXd gin_omega(const Eigen::MatrixXd& cross) {
    const Eigen::Index ny = cross.rows(), nz = cross.cols();
    require(ny >= 2, "GIN needs |Y| >= 2");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(cross.transpose(), Eigen::ComputeFullV);
    const Eigen::MatrixXd& V = svd.matrixV();
    if (ny > nz) return V.rightCols(ny - nz);
    return V.rightCols(1);
}

GinResult gin_test(const sem::Dataset& data, const std::vector<int>& Z, const std::vector<int>& Y, double alpha,
                   std::uint64_t seed, const HsicOptions& opt) {
    require(Y.size() >= 2, "GIN needs |Y| >= 2");
    require(!Z.empty(), "GIN needs a nonempty Z");
    const Eigen::Index n = data.rows();
    Eigen::MatrixXd y(n, Y.size()), z(n, Z.size());
    for (std::size_t i = 0; i < Y.size(); ++i) y.col(static_cast<Eigen::Index>(i)) = data.values.col(Y[i]);
    for (std::size_t i = 0; i < Z.size(); ++i) z.col(static_cast<Eigen::Index>(i)) = data.values.col(Z[i]);
    Eigen::MatrixXd yc = y.rowwise() - y.colwise().mean();
    Eigen::MatrixXd zc = z.rowwise() - z.colwise().mean();
    Eigen::MatrixXd cross = yc.transpose() * zc / static_cast<double>(n - 1);
    GinResult res;
    res.omega = gin_omega(cross);
    const Eigen::Index m = res.omega.cols();
    double min_p = 1.0, max_stat = 0.0;
    bool degenerate = false;
    for (Eigen::Index c = 0; c < m; ++c) {
        Eigen::MatrixXd e = yc * res.omega.col(c);
        TestResult t = hsic_test(e, zc, alpha, util::mix_seed(seed, static_cast<std::uint64_t>(c)), opt);
        min_p = std::min(min_p, t.p_value);
        max_stat = std::max(max_stat, t.statistic);
        degenerate = degenerate || t.degenerate;
    }
    res.test = make_result(max_stat, std::min(1.0, min_p * static_cast<double>(m)), alpha);
    res.test.degenerate = degenerate;
    return res;
}

TestResult in_test(const sem::Dataset& data, const std::vector<int>& Z, int y, double alpha, std::uint64_t seed,
                   const HsicOptions& opt) {
    require(!Z.empty(), "IN test needs a nonempty Z");
    const Eigen::Index n = data.rows();
    require(n > static_cast<Eigen::Index>(Z.size()) + 2, "IN test needs n > |Z| + 2");
    Eigen::MatrixXd z(n, Z.size());
    for (std::size_t i = 0; i < Z.size(); ++i) z.col(static_cast<Eigen::Index>(i)) = data.values.col(Z[i]);
    Eigen::MatrixXd zc = z.rowwise() - z.colwise().mean();
    Eigen::VectorXd yc = data.values.col(y).array() - data.values.col(y).mean();
    Eigen::MatrixXd gram = zc.transpose() * zc;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success || numeric_rank(gram, 1e-12) < gram.rows())
        fail(ErrorKind::numeric, "IN test: singular Gram matrix of Z");
    Eigen::VectorXd w = llt.solve(zc.transpose() * yc);
    Eigen::MatrixXd resid = yc - zc * w;
    return hsic_test(resid, zc, alpha, seed, opt);
}

}  // namespace lc::stats
