#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "latentcycle/sem.hpp"

namespace lc::stats {

enum class Decision { independent, dependent };

// For rank tests "independent" means the rank constraint is accepted.
struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    Decision decision = Decision::independent;
    bool degenerate = false;
    std::string note;

    bool independent() const { return decision == Decision::independent; }
};

TestResult make_result(double statistic, double p_value, double alpha);

TestResult fisher_z_ci_test(const sem::Dataset& data, int i, int j, const std::vector<int>& S, double alpha);
// same test from an already computed sample partial correlation
TestResult fisher_z_from_partial(double r, int n, int cond_size, double alpha);

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& x);

struct HistogramDensity {
    std::vector<int> bins;     // per axis
    std::vector<double> lo, hi;  // original-scale range per axis
    std::vector<double> mass;  // row-major over cells, sums to 1
    bool degenerate = false;   // some axis was constant
    int n = 0;

    int dims() const { return static_cast<int>(bins.size()); }
    std::size_t cell_count() const { return mass.size(); }
    int bin_of(int axis, double x) const;
    std::size_t flat(const std::vector<int>& cell) const;
};

// per-axis m = max(2, floor(n^(1/(2+d))))
int histogram_bins(int n, int d);
HistogramDensity histogram_estimate(const sem::Dataset& data, const std::vector<int>& dims);
HistogramDensity histogram_estimate(const sem::Dataset& data, const std::vector<int>& dims, const std::vector<int>& bins);

double l1_dependence(const sem::Dataset& data, int x, int y, const std::vector<int>& A);
// null distribution by permuting x inside the histogram cells of A
TestResult l1_permutation_test(const sem::Dataset& data, int x, int y, const std::vector<int>& A, double alpha,
                               int n_perm, std::uint64_t seed);

struct HsicOptions {
    int n_perm = 200;
    // above this sample size both Gram matrices are replaced by pivoted incomplete Cholesky factors
    int exact_limit = 1000;
    double cholesky_tol = 1e-6;
    int max_rank = 120;
};

// columns of u and v are variables, rows are observations
TestResult hsic_test(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v, double alpha, std::uint64_t seed,
                     const HsicOptions& opt = {});
double hsic_statistic(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v);

double sample_cumulant(const sem::Dataset& data, const std::vector<int>& indices);
double sample_cumulant(const std::vector<Eigen::VectorXd>& columns);

// singular values count when >= rel_tol * largest and >= abs_floor (roundoff in an exactly zero block)
int numeric_rank(const Eigen::MatrixXd& m, double rel_tol = 1e-9, double abs_floor = 0.0);

// rank(Sigma_{A,B}) <= r, decided on singular values
TestResult rank_test_population(const Eigen::MatrixXd& cov, const std::vector<int>& A, const std::vector<int>& B,
                                int r, double rel_tol = 1e-9);

struct RankSampleOptions {
    bool bootstrap = false;
    int n_boot = 200;
    std::uint64_t seed = 1;
};
// Bartlett canonical-correlation test of rank(Sigma_{A,B}) <= r
TestResult rank_test_sample(const sem::Dataset& data, const std::vector<int>& A, const std::vector<int>& B, int r,
                            double alpha, const RankSampleOptions& opt = {});
TestResult rank_test_sample_cov(const Eigen::MatrixXd& cov, int n, const std::vector<int>& A,
                                const std::vector<int>& B, int r, double alpha);

struct GinResult {
    TestResult test;
    Eigen::MatrixXd omega;  // |Y| x m, one null direction per column
};

// null directions of omega^T E[Y Z^T]
Eigen::MatrixXd gin_omega(const Eigen::MatrixXd& cross_cov_yz);
GinResult gin_test(const sem::Dataset& data, const std::vector<int>& Z, const std::vector<int>& Y, double alpha,
                   std::uint64_t seed, const HsicOptions& opt = {});
TestResult in_test(const sem::Dataset& data, const std::vector<int>& Z, int y, double alpha, std::uint64_t seed,
                   const HsicOptions& opt = {});

double normal_two_sided_p(double z);
double chi2_upper_p(double x, double df);

}  // namespace lc::stats
