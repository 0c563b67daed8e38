#include "latentcycle/sem.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "latentcycle/error.hpp"
#include "latentcycle/util.hpp"

namespace lc::sem {

NoiseSpec NoiseSpec::gaussian(double mean, double variance) { return {NoiseKind::gaussian, mean, variance}; }
NoiseSpec NoiseSpec::uniform(double lo, double hi) { return {NoiseKind::uniform, lo, hi}; }
NoiseSpec NoiseSpec::shifted_exponential(double rate) { return {NoiseKind::shifted_exponential, rate, 0.0}; }

void NoiseSpec::validate() const {
    switch (kind) {
        case NoiseKind::gaussian: require(p2 > 0, "gaussian noise variance must be > 0"); break;
        case NoiseKind::uniform: require(p1 < p2, "uniform noise needs lo < hi"); break;
        case NoiseKind::shifted_exponential: require(p1 > 0, "exponential noise rate must be > 0"); break;
    }
}

double NoiseSpec::mean() const {
    switch (kind) {
        case NoiseKind::gaussian: return p1;
        case NoiseKind::uniform: return 0.5 * (p1 + p2);
        case NoiseKind::shifted_exponential: return 0.0;
    }
    return 0.0;
}

double NoiseSpec::cumulant(int k) const {
    require(k >= 2 && k <= 4, "noise cumulants are available for orders 2..4");
    switch (kind) {
        case NoiseKind::gaussian: return k == 2 ? p2 : 0.0;
        case NoiseKind::uniform: {
            double w = p2 - p1;
            if (k == 2) return w * w / 12.0;
            if (k == 3) return 0.0;
            return -std::pow(w, 4) / 120.0;
        }
        case NoiseKind::shifted_exponential: {
            double r = p1;
            if (k == 2) return 1.0 / (r * r);
            if (k == 3) return 2.0 / (r * r * r);
            return 6.0 / (r * r * r * r);
        }
    }
    return 0.0;
}

double NoiseSpec::draw(std::mt19937_64& rng) const {
    switch (kind) {
        case NoiseKind::gaussian: return std::normal_distribution<double>(p1, std::sqrt(p2))(rng);
        case NoiseKind::uniform: return std::uniform_real_distribution<double>(p1, p2)(rng);
        case NoiseKind::shifted_exponential: return std::exponential_distribution<double>(p1)(rng) - 1.0 / p1;
    }
    return 0.0;
}

double NoiseSpec::cdf(double x) const {
    switch (kind) {
        case NoiseKind::gaussian: return 0.5 * std::erfc(-(x - p1) / std::sqrt(2.0 * p2));
        case NoiseKind::uniform: return std::clamp((x - p1) / (p2 - p1), 0.0, 1.0);
        case NoiseKind::shifted_exponential: {
            double t = x + 1.0 / p1;
            return t <= 0 ? 0.0 : -std::expm1(-p1 * t);
        }
    }
    return 0.0;
}

std::string NoiseSpec::name() const {
    switch (kind) {
        case NoiseKind::gaussian: return "gaussian";
        case NoiseKind::uniform: return "uniform";
        case NoiseKind::shifted_exponential: return "shifted_exponential";
    }
    return "?";
}

int Dataset::column(const std::string& label) const {
    for (int i = 0; i < cols(); ++i)
        if (labels[i] == label) return i;
    fail(ErrorKind::validation, "dataset has no column '" + label + "'");
}

Dataset Dataset::select(const std::vector<int>& cs) const {
    Dataset d;
    d.values.resize(rows(), static_cast<Eigen::Index>(cs.size()));
    for (std::size_t c = 0; c < cs.size(); ++c) {
        require(cs[c] >= 0 && cs[c] < cols(), "column index out of range");
        d.labels.push_back(labels[cs[c]]);
        d.values.col(static_cast<Eigen::Index>(c)) = values.col(cs[c]);
    }
    return d;
}

LinearSem::LinearSem(graph::DirectedGraph g, Eigen::MatrixXd coefficients, std::vector<NoiseSpec> noise)
    : graph_(std::move(g)), coef_(std::move(coefficients)), noise_(std::move(noise)) {
    const int p = graph_.size();
    require(coef_.rows() == p && coef_.cols() == p, "coefficient matrix must be p x p");
    require(static_cast<int>(noise_.size()) == p, "one noise spec per vertex is required");
    for (const auto& n : noise_) n.validate();
    for (int j = 0; j < p; ++j)
        for (int i = 0; i < p; ++i) {
            bool edge = graph_.has_edge(j, i);
            if (edge)
                require(coef_(j, i) != 0.0, "edge " + graph_.label(j) + "->" + graph_.label(i) + " has zero coefficient");
            else
                require(coef_(j, i) == 0.0,
                        "nonzero coefficient without edge " + graph_.label(j) + "->" + graph_.label(i));
        }
    if (p > 0) {
        if (graph::is_acyclic(graph_)) {
            radius_ = 0.0;
        } else {
            Eigen::EigenSolver<Eigen::MatrixXd> es(coef_, false);
            radius_ = es.eigenvalues().cwiseAbs().maxCoeff();
        }
        if (!(radius_ < 1.0))
            fail(ErrorKind::validation, "coefficient matrix has spectral radius " + std::to_string(radius_) +
                                            " >= 1; cyclic models must be stationary so that I - A is invertible");
        Eigen::MatrixXd IA = Eigen::MatrixXd::Identity(p, p) - coef_;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(IA.transpose());
        if (!lu.isInvertible()) fail(ErrorKind::numeric, "I - A is singular");
        mix_ = lu.inverse();
    }
}

Eigen::MatrixXd implied_covariance(const LinearSem& sem) {
    const int p = sem.size();
    Eigen::VectorXd d(p);
    for (int i = 0; i < p; ++i) d(i) = sem.noise()[i].cumulant(2);
    const auto& B = sem.mixing();
    Eigen::MatrixXd s = B * d.asDiagonal() * B.transpose();
    return 0.5 * (s + s.transpose());
}

double implied_cumulant(const LinearSem& sem, const std::vector<int>& idx) {
    const int k = static_cast<int>(idx.size());
    const auto& B = sem.mixing();
    double s = 0.0;
    for (int j = 0; j < sem.size(); ++j) {
        double kap = sem.noise()[j].cumulant(k);
        if (kap == 0.0) continue;
        double prod = kap;
        for (int i : idx) prod *= B(i, j);
        s += prod;
    }
    return s;
}

tensor::CumulantTensor implied_cumulant_tensor(const LinearSem& sem, int k) {
    require(k >= 2 && k <= 4, "cumulant tensors are supported for k in {2,3,4}");
    const int p = sem.size();
    tensor::CumulantTensor t(k, p);
    std::vector<int> ids(p);
    for (int i = 0; i < p; ++i) ids[i] = i;
    t.labels.assign(k, ids);
    std::vector<int> idx(k, 0);
    for (std::size_t flat = 0; flat < t.values.size(); ++flat) {
        std::size_t r = flat;
        for (int a = k - 1; a >= 0; --a) {
            idx[a] = static_cast<int>(r % p);
            r /= p;
        }
        t.values[flat] = implied_cumulant(sem, idx);
    }
    return t;
}

Dataset sample(const LinearSem& sem, int n, std::uint64_t seed) {
    require(n >= 0, "sample size must be >= 0");
    const int p = sem.size();
    Dataset d;
    for (int i = 0; i < p; ++i) d.labels.push_back(sem.graph().label(i));
    d.values.resize(n, p);
    std::mt19937_64 rng(seed);
    Eigen::VectorXd eps(p);
    const Eigen::MatrixXd& B = sem.mixing();
    for (int r = 0; r < n; ++r) {
        for (int i = 0; i < p; ++i) eps(i) = sem.noise()[i].draw(rng);
        d.values.row(r) = (B * eps).transpose();
    }
    return d;
}

Dataset observed_columns(const LinearSem& sem, const Dataset& full) { return full.select(sem.graph().observed()); }

double partial_correlation(const Eigen::MatrixXd& cov, int i, int j, const std::vector<int>& S) {
    require(i != j, "partial correlation needs two distinct variables");
    std::vector<int> idx{i, j};
    for (int s : S) {
        require(s != i && s != j, "conditioning set must exclude i and j");
        idx.push_back(s);
    }
    const int m = static_cast<int>(idx.size());
    Eigen::MatrixXd sub(m, m);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) sub(a, b) = cov(idx[a], idx[b]);
    Eigen::LLT<Eigen::MatrixXd> llt(sub);
    if (llt.info() != Eigen::Success) fail(ErrorKind::numeric, "covariance submatrix is not positive definite");
    Eigen::MatrixXd P = llt.solve(Eigen::MatrixXd::Identity(m, m));
    double r = -P(0, 1) / std::sqrt(P(0, 0) * P(1, 1));
    return std::clamp(r, -1.0, 1.0);
}

double tv_smoothness_l_bound(const LinearSem& sem, int y, const std::vector<int>& A) {
    for (const auto& n : sem.noise())
        require(n.kind == NoiseKind::gaussian, "the TV-smoothness bound is defined for Gaussian noise only");
    Eigen::MatrixXd S = implied_covariance(sem);
    if (A.empty()) return 0.0;
    const int m = static_cast<int>(A.size());
    Eigen::MatrixXd Saa(m, m);
    Eigen::RowVectorXd Sya(m);
    for (int a = 0; a < m; ++a) {
        Sya(a) = S(y, A[a]);
        for (int b = 0; b < m; ++b) Saa(a, b) = S(A[a], A[b]);
    }
    Eigen::RowVectorXd beta = Saa.ldlt().solve(Sya.transpose()).transpose();
    double cvar = S(y, y) - beta.dot(Sya);
    require(cvar > 0, "var(Y|A) must be > 0");
    const double two_phi0 = 2.0 / std::sqrt(2.0 * std::numbers::pi);
    return two_phi0 * beta.cwiseAbs().sum() / std::sqrt(cvar);
}

CoefficientRegime parse_regime(const std::string& s) {
    if (s == "unit") return CoefficientRegime::unit;
    if (s == "symmetric_unit" || s == "uniform") return CoefficientRegime::symmetric_unit;
    if (s == "banded") return CoefficientRegime::banded;
    if (s == "moderate") return CoefficientRegime::moderate;
    fail(ErrorKind::validation, "unknown coefficient regime '" + s + "' (unit|symmetric_unit|banded|moderate)");
}

LinearSem random_sem(const graph::DirectedGraph& g, CoefficientRegime regime, const NoiseSpec& noise,
                     std::uint64_t seed) {
    const int p = g.size();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
    for (auto [j, i] : g.edges()) {
        double v = 1.0;
        switch (regime) {
            case CoefficientRegime::unit: v = 1.0; break;
            case CoefficientRegime::symmetric_unit:
                do v = -1.0 + 2.0 * u01(rng);
                while (v == 0.0);
                break;
            case CoefficientRegime::banded:
                v = (0.5 + 4.5 * u01(rng)) * (u01(rng) < 0.5 ? -1.0 : 1.0);
                break;
            case CoefficientRegime::moderate:
                v = (0.5 + 1.0 * u01(rng)) * (u01(rng) < 0.5 ? -1.0 : 1.0);
                break;
        }
        A(j, i) = v;
    }
    if (!graph::is_acyclic(g) && p > 0) {
        Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
        double r = es.eigenvalues().cwiseAbs().maxCoeff();
        if (r >= 0.9) A *= 0.9 / r;
    }
    return LinearSem(g, A, std::vector<NoiseSpec>(p, noise));
}

}  // namespace lc::sem
