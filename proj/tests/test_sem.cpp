#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "latentcycle/error.hpp"
#include "latentcycle/sem.hpp"
#include "latentcycle/util.hpp"

using namespace lc::sem;
using testing::load_graph;
using testing::make_graph;

namespace {

LinearSem chain_sem(double c = 1.0) {
    auto g = make_graph("X0>X1; X1>X2");
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(3, 3);
    A(0, 1) = c;
    A(1, 2) = c;
    return LinearSem(g, A, std::vector<NoiseSpec>(3, NoiseSpec::gaussian(0, 1)));
}

Eigen::MatrixXd sample_cov(const Dataset& d) {
    Eigen::MatrixXd c = d.values.rowwise() - d.values.colwise().mean();
    return c.transpose() * c / static_cast<double>(d.rows() - 1);
}

}  // namespace

TEST_CASE("noise cumulants in closed form") {
    CHECK(NoiseSpec::gaussian(0, 2).cumulant(2) == doctest::Approx(2));
    CHECK(NoiseSpec::gaussian(0, 2).cumulant(3) == 0);
    CHECK(NoiseSpec::uniform(-1, 1).cumulant(2) == doctest::Approx(1.0 / 3));
    CHECK(NoiseSpec::uniform(-1, 1).cumulant(3) == 0);
    CHECK(NoiseSpec::uniform(-1, 1).cumulant(4) == doctest::Approx(-2.0 / 15));
    CHECK(NoiseSpec::shifted_exponential(1).cumulant(3) == doctest::Approx(2));
    CHECK(NoiseSpec::shifted_exponential(2).cumulant(4) == doctest::Approx(6.0 / 16));
    CHECK(NoiseSpec::shifted_exponential(1).mean() == 0);
    CHECK_THROWS_AS(NoiseSpec::uniform(1, 1).validate(), lc::Error);
    CHECK_THROWS_AS(NoiseSpec::gaussian(0, 0).validate(), lc::Error);
    CHECK_THROWS_AS(NoiseSpec::shifted_exponential(0).validate(), lc::Error);
}

TEST_CASE("implied covariance") {
    Eigen::Matrix3d expect;
    expect << 1, 1, 1, 1, 2, 2, 1, 2, 3;
    CHECK((implied_covariance(chain_sem()) - expect).cwiseAbs().maxCoeff() < 1e-12);

    auto empty = make_graph("X0;X1;X2");
    LinearSem e(empty, Eigen::MatrixXd::Zero(3, 3), std::vector<NoiseSpec>(3, NoiseSpec::gaussian(0, 1)));
    CHECK(implied_covariance(e).isIdentity(1e-14));
}

TEST_CASE("coefficients must match the edges and I - A must be invertible") {
    auto g = make_graph("X0>X1");
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, 2);
    CHECK_THROWS_AS(LinearSem(g, A, std::vector<NoiseSpec>(2)), lc::Error);
    A(1, 0) = 0.5;
    CHECK_THROWS_AS(LinearSem(g, A, std::vector<NoiseSpec>(2)), lc::Error);

    auto loop = make_graph("X0<>X1");
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(2, 2);
    B(0, 1) = 1.0;
    B(1, 0) = 1.0;
    CHECK_THROWS_AS(LinearSem(loop, B, std::vector<NoiseSpec>(2)), lc::Error);
}

TEST_CASE("cyclic covariance matches a Monte-Carlo estimate") {
    auto g = load_graph("cycle_under_latent");
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(7, 7);
    for (int x = 1; x <= 6; ++x) {
        A(0, x) = 0.5;
        A(x, 0) = 0.2;
    }
    LinearSem s(g, A, std::vector<NoiseSpec>(7, NoiseSpec::gaussian(0, 1)));
    CHECK(s.spectral_radius() < 1.0);
    auto pop = implied_covariance(s);
    auto mc = sample_cov(sample(s, 1000000, 3));
    CHECK(((mc - pop).array() / pop.array()).abs().maxCoeff() < 0.02);
}

TEST_CASE("implied cumulant tensors") {
    auto cs = chain_sem();
    auto c2 = implied_cumulant_tensor(cs, 2);
    auto cov = implied_covariance(cs);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(c2.at({i, j}) == doctest::Approx(cov(i, j)).epsilon(1e-12));

    auto one = make_graph("X0");
    LinearSem single(one, Eigen::MatrixXd::Zero(1, 1), {NoiseSpec::shifted_exponential(1)});
    CHECK(implied_cumulant(single, {0, 0, 0}) == doctest::Approx(2));

    // star with a skewed root and Gaussian children: C3(X1,X2,X3) is the root's third cumulant
    auto star = load_graph("three_star");
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(4, 4);
    A(0, 1) = A(0, 2) = A(0, 3) = 1.0;
    LinearSem ss(star, A, {NoiseSpec::shifted_exponential(0.5), NoiseSpec::gaussian(0, 1), NoiseSpec::gaussian(0, 1),
                           NoiseSpec::gaussian(0, 1)});
    CHECK(implied_cumulant(ss, {1, 2, 3}) == doctest::Approx(2.0 / 0.125));

    CHECK_THROWS_AS(implied_cumulant_tensor(cs, 5), lc::Error);
    CHECK(implied_cumulant_tensor(cs, 3).max_abs() < 1e-14);
}

TEST_CASE("third-order tensor equals the explicit noise sum and is symmetric") {
    auto g = lc::graph::random_dag(5, 3.0, 17);
    auto s = random_sem(g, CoefficientRegime::moderate, NoiseSpec::shifted_exponential(1.0), 4);
    auto t = implied_cumulant_tensor(s, 3);
    const auto& B = s.mixing();
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            for (int k = 0; k < 5; ++k) {
                double ref = 0;
                for (int l = 0; l < 5; ++l) ref += B(i, l) * B(j, l) * B(k, l) * s.noise()[l].cumulant(3);
                CHECK(t.at({i, j, k}) == doctest::Approx(ref).epsilon(1e-10));
                CHECK(t.at({i, j, k}) == doctest::Approx(t.at({k, i, j})).epsilon(1e-12));
                CHECK(t.at({i, j, k}) == doctest::Approx(t.at({j, i, k})).epsilon(1e-12));
            }
}

TEST_CASE("sampling") {
    auto s = chain_sem();
    auto empty = sample(s, 0, 1);
    CHECK(empty.rows() == 0);
    CHECK(empty.cols() == 3);
    CHECK_THROWS_AS(sample(s, -1, 1), lc::Error);
    CHECK(sample(s, 50, 9).values == sample(s, 50, 9).values);
    CHECK(sample(s, 50, 9).values != sample(s, 50, 10).values);

    auto pop = implied_covariance(s);
    auto mc = sample_cov(sample(s, 100000, 5));
    CHECK(((mc - pop).array() / pop.array()).abs().maxCoeff() < 0.05);
}

TEST_CASE("sample covariance error shrinks with n") {
    auto s = chain_sem(0.8);
    auto pop = implied_covariance(s);
    int monotone = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        double prev = 1e9;
        bool ok = true;
        for (int n : {1000, 10000, 100000}) {
            double err = (sample_cov(sample(s, n, lc::util::mix_seed(seed, n))) - pop).cwiseAbs().maxCoeff();
            ok = ok && err < prev;
            prev = err;
        }
        monotone += ok;
    }
    CHECK(monotone >= 4);
}

TEST_CASE("observed_columns drops latents") {
    auto g = load_graph("three_star");
    auto s = random_sem(g, CoefficientRegime::unit, NoiseSpec::gaussian(0, 1), 1);
    auto d = observed_columns(s, sample(s, 10, 1));
    CHECK(d.labels == std::vector<std::string>{"X1", "X2", "X3"});
}

TEST_CASE("partial correlation") {
    auto cov = implied_covariance(chain_sem());
    CHECK(std::abs(partial_correlation(cov, 0, 2, {1})) < 1e-12);
    CHECK(partial_correlation(cov, 0, 1, {}) == doctest::Approx(1 / std::sqrt(2.0)));
    CHECK(partial_correlation(Eigen::MatrixXd::Identity(4, 4), 0, 3, {1, 2}) == 0);
    Eigen::Matrix2d bad;
    bad << 1, 2, 2, 1;
    CHECK_THROWS_AS(partial_correlation(bad, 0, 1, {}), lc::Error);
}

TEST_CASE("vanishing partial correlations are exactly the d-separations") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto g = lc::graph::random_dag(6, 2.5, lc::util::mix_seed(21, seed));
        auto s = random_sem(g, CoefficientRegime::symmetric_unit, NoiseSpec::gaussian(0, 1), seed);
        auto cov = implied_covariance(s);
        for (int i = 0; i < 6; ++i)
            for (int j = i + 1; j < 6; ++j)
                for (unsigned mask = 0; mask < 64; ++mask) {
                    if (mask >> i & 1u || mask >> j & 1u) continue;
                    std::vector<int> S;
                    for (int v = 0; v < 6; ++v)
                        if (mask >> v & 1u) S.push_back(v);
                    const bool zero = std::abs(partial_correlation(cov, i, j, S)) < 1e-9;
                    REQUIRE(zero == lc::graph::d_separated(g, {i}, {j}, S));
                }
    }
}

TEST_CASE("TV smoothness bound") {
    const double two_phi0 = 2.0 / std::sqrt(2.0 * std::numbers::pi);
    auto s = chain_sem();
    CHECK(tv_smoothness_l_bound(s, 1, {0}) == doctest::Approx(two_phi0));
    CHECK(two_phi0 == doctest::Approx(0.7979).epsilon(1e-4));
    auto apart = make_graph("X0;X1");
    LinearSem e(apart, Eigen::MatrixXd::Zero(2, 2), std::vector<NoiseSpec>(2));
    CHECK(tv_smoothness_l_bound(e, 1, {0}) == 0);
    // coefficient c on X0 -> X1 with unit noise: bound 2 phi(0) c
    CHECK(tv_smoothness_l_bound(chain_sem(3.0), 1, {0}) == doctest::Approx(3 * two_phi0));

    auto g = make_graph("X0>X1");
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, 2);
    A(0, 1) = 1;
    LinearSem u(g, A, std::vector<NoiseSpec>(2, NoiseSpec::uniform(-1, 1)));
    CHECK_THROWS_AS(tv_smoothness_l_bound(u, 1, {0}), lc::Error);
}

TEST_CASE("random_sem regimes") {
    auto g = lc::graph::random_dag(8, 4.0, 3);
    auto band = random_sem(g, CoefficientRegime::banded, NoiseSpec::gaussian(0, 1), 2);
    auto mod = random_sem(g, CoefficientRegime::moderate, NoiseSpec::gaussian(0, 1), 2);
    for (auto [u, v] : g.edges()) {
        CHECK(std::abs(band.coefficients()(u, v)) >= 0.5);
        CHECK(std::abs(band.coefficients()(u, v)) <= 5.0);
        CHECK(std::abs(mod.coefficients()(u, v)) >= 0.5);
        CHECK(std::abs(mod.coefficients()(u, v)) <= 1.5);
    }
    auto cyc = random_sem(load_graph("cycle_under_latent"), CoefficientRegime::banded, NoiseSpec::gaussian(0, 1), 5);
    CHECK(cyc.spectral_radius() < 1.0);
    CHECK(parse_regime("moderate") == CoefficientRegime::moderate);
    CHECK_THROWS_AS(parse_regime("huge"), lc::Error);
}
