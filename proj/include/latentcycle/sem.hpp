#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "latentcycle/cumulant_tensor.hpp"
#include "latentcycle/graph.hpp"

namespace lc::sem {

enum class NoiseKind { gaussian, uniform, shifted_exponential };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::gaussian;
    double p1 = 0.0;  // gaussian: mean; uniform: lo; shifted_exponential: rate
    double p2 = 1.0;  // gaussian: variance; uniform: hi

    static NoiseSpec gaussian(double mean, double variance);
    static NoiseSpec uniform(double lo, double hi);
    static NoiseSpec shifted_exponential(double rate);

    void validate() const;
    double mean() const;
    // closed-form cumulant of order k in {2,3,4}
    double cumulant(int k) const;
    double draw(std::mt19937_64& rng) const;
    double cdf(double x) const;
    std::string name() const;
};

struct Dataset {
    std::vector<std::string> labels;
    Eigen::MatrixXd values;  // n x p

    int rows() const { return static_cast<int>(values.rows()); }
    int cols() const { return static_cast<int>(values.cols()); }
    int column(const std::string& label) const;
    Dataset select(const std::vector<int>& cols) const;
};

class LinearSem {
public:
    // coefficients(j, i) is the strength of edge j -> i
    LinearSem(graph::DirectedGraph g, Eigen::MatrixXd coefficients, std::vector<NoiseSpec> noise);

    const graph::DirectedGraph& graph() const { return graph_; }
    const Eigen::MatrixXd& coefficients() const { return coef_; }
    const std::vector<NoiseSpec>& noise() const { return noise_; }
    // X = mixing() * eps, mixing() = (I - A)^{-T}
    const Eigen::MatrixXd& mixing() const { return mix_; }
    double spectral_radius() const { return radius_; }
    int size() const { return graph_.size(); }

private:
    graph::DirectedGraph graph_;
    Eigen::MatrixXd coef_;
    std::vector<NoiseSpec> noise_;
    Eigen::MatrixXd mix_;
    double radius_ = 0.0;
};

Eigen::MatrixXd implied_covariance(const LinearSem& sem);
tensor::CumulantTensor implied_cumulant_tensor(const LinearSem& sem, int k);
// single entry of the order-|idx| cumulant tensor
double implied_cumulant(const LinearSem& sem, const std::vector<int>& idx);

Dataset sample(const LinearSem& sem, int n, std::uint64_t seed);
Dataset observed_columns(const LinearSem& sem, const Dataset& full);

double partial_correlation(const Eigen::MatrixXd& cov, int i, int j, const std::vector<int>& S);
double tv_smoothness_l_bound(const LinearSem& sem, int y, const std::vector<int>& A);

enum class CoefficientRegime {
    unit,            // every edge 1
    symmetric_unit,  // U[-1, 1]
    banded,          // U([-5,-0.5] u [0.5,5])
    moderate         // U([-1.5,-0.5] u [0.5,1.5])
};
CoefficientRegime parse_regime(const std::string& s);

// Draws coefficients for every edge; graphs with cycles are rescaled to spectral radius 0.9 if needed.
LinearSem random_sem(const graph::DirectedGraph& g, CoefficientRegime regime, const NoiseSpec& noise,
                     std::uint64_t seed);

}  // namespace lc::sem
