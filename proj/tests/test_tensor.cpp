#include <doctest.h>

#include <algorithm>
#include <random>

#include "helpers.hpp"
#include "latentcycle/error.hpp"
#include "latentcycle/sem.hpp"
#include "latentcycle/stats.hpp"
#include "latentcycle/tensor.hpp"
#include "latentcycle/util.hpp"

using namespace lc::tensor;
using lc::sem::LinearSem;
using lc::sem::NoiseSpec;
using testing::ids;
using testing::load_graph;
using testing::make_graph;

namespace {

CumulantTensor random_tensor(int order, int dim, std::uint64_t seed) {
    CumulantTensor t(order, dim);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1, 1);
    for (auto& v : t.values) v = u(rng);
    return t;
}

CumulantTensor diagonal_identity(int order, int dim) {
    CumulantTensor t(order, dim);
    for (int i = 0; i < dim; ++i) t.at(std::vector<int>(order, i)) = 1.0;
    return t;
}

// the counterexample SEM: unit coefficients, skewed exogenous latents, Gaussian elsewhere
LinearSem counterexample_sem() {
    auto g = load_graph("tensor_counterexample");
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(g.size(), g.size());
    for (auto [u, v] : g.edges()) A(u, v) = 1.0;
    std::vector<NoiseSpec> noise(g.size(), NoiseSpec::gaussian(0, 1));
    noise[g.index_of("L1")] = NoiseSpec::shifted_exponential(1.0);
    noise[g.index_of("L2")] = NoiseSpec::shifted_exponential(1.0);
    return LinearSem(g, A, noise);
}

int sign(const std::vector<int>& p) {
    int s = 1;
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = i + 1; j < p.size(); ++j)
            if (p[i] > p[j]) s = -s;
    return s;
}

double brute_hyperdet3(const CumulantTensor& t) {
    std::vector<int> a(t.dim);
    for (int i = 0; i < t.dim; ++i) a[i] = i;
    double total = 0;
    auto s2 = a;
    do {
        auto s3 = a;
        do {
            double prod = sign(s2) * sign(s3);
            for (int i = 0; i < t.dim; ++i) prod *= t.at({i, s2[i], s3[i]});
            total += prod;
        } while (std::next_permutation(s3.begin(), s3.end()));
    } while (std::next_permutation(s2.begin(), s2.end()));
    return total;
}

CumulantTensor swap_slices(const CumulantTensor& t, int axis) {
    auto out = t;
    const int n = t.dim;
    for (std::size_t f = 0; f < t.values.size(); ++f) {
        std::vector<int> idx(t.order);
        std::size_t rest = f;
        for (int a = t.order - 1; a >= 0; --a) {
            idx[a] = static_cast<int>(rest % n);
            rest /= n;
        }
        auto other = idx;
        if (idx[axis] < 2) other[axis] = 1 - idx[axis];
        out.at(idx) = t.at(other);
    }
    return out;
}

}  // namespace

TEST_CASE("subtensor") {
    auto t = random_tensor(3, 3, 1);
    auto same = subtensor(t, {{0, 1, 2}, {0, 1, 2}, {0, 1, 2}});
    CHECK(same.values == t.values);
    auto m = random_tensor(2, 4, 2);
    auto sub = subtensor(m, {{3, 1}, {0, 2}});
    CHECK(sub.at({0, 1}) == m.at({3, 2}));
    CHECK(sub.at({1, 0}) == m.at({1, 0}));
    CHECK_THROWS_AS(subtensor(m, {{0, 1}, {2}}), lc::Error);

    auto s = counterexample_sem();
    const auto& g = s.graph();
    auto c = implied_subtensor(s, {ids(g, "X5,X6"), ids(g, "X3,X4"), ids(g, "X1,X2")});
    // no treks through X1 with X4, nor X2 with X3
    for (int a = 0; a < 2; ++a) {
        CHECK(c.at({a, 1, 0}) == 0);
        CHECK(c.at({a, 0, 1}) == 0);
    }
    CHECK(c.at({0, 0, 0}) != 0);
}

TEST_CASE("hyperdeterminant") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto t = random_tensor(2, 4, seed);
        Eigen::Matrix4d m;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) m(i, j) = t.at({i, j});
        const double lu = m.partialPivLu().determinant();
        CHECK(hyperdeterminant(t) == doctest::Approx(lu).epsilon(1e-12));
    }
    CHECK(hyperdeterminant(diagonal_identity(4, 3)) == doctest::Approx(1.0));
    // only (id, id) survives on the diagonal, at any order
    CHECK(hyperdeterminant(diagonal_identity(3, 2)) == 1);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto t = random_tensor(3, 3, seed);
        CHECK(hyperdeterminant(t) == doctest::Approx(brute_hyperdet3(t)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(hyperdeterminant(random_tensor(3, 6, 1)), lc::Error);
}

TEST_CASE("even order: swapping two parallel slices negates the hyperdeterminant") {
    for (int n : {2, 3})
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            auto t = random_tensor(4, n, seed + 10 * n);
            for (int axis = 0; axis < 4; ++axis)
                CHECK(hyperdeterminant(swap_slices(t, axis)) == doctest::Approx(-hyperdeterminant(t)).epsilon(1e-12));
        }
}

TEST_CASE("odd order: slice swaps along the first axis keep the sign") {
    auto t = random_tensor(3, 2, 5);
    const double d = hyperdeterminant(t);
    REQUIRE(std::abs(d) > 1e-6);
    CHECK(hyperdeterminant(swap_slices(t, 0)) == doctest::Approx(d).epsilon(1e-12));
}

TEST_CASE("constraint check: tetrad, star, and the odd-order counterexample") {
    auto four = make_graph("L>X1,X2,X3,X4");
    auto s4 = lc::sem::random_sem(four, lc::sem::CoefficientRegime::moderate, NoiseSpec::gaussian(0, 1), 3);
    auto tetrad = tensor_constraint_check(s4, {ids(four, "X1,X2"), ids(four, "X3,X4")}, 6);
    CHECK(tetrad.graphical);
    CHECK(tetrad.numeric_zero);
    CHECK(tetrad.consistent);

    auto star = load_graph("three_star");
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(4, 4);
    A(0, 1) = 0.7;
    A(0, 2) = -1.2;
    A(0, 3) = 0.9;
    LinearSem ss(star, A, {NoiseSpec::shifted_exponential(1.0), NoiseSpec::gaussian(0, 1), NoiseSpec::gaussian(0, 1),
                           NoiseSpec::gaussian(0, 1)});
    auto c = tensor_constraint_check(ss, {ids(star, "X1"), ids(star, "X2"), ids(star, "X3")}, 6);
    CHECK_FALSE(c.graphical);
    CHECK(c.numeric_det == doctest::Approx(0.7 * -1.2 * 0.9 * 2.0));
    CHECK(c.consistent);

    auto s = counterexample_sem();
    const auto& g = s.graph();
    auto ce = tensor_constraint_check(s, {ids(g, "X5,X6"), ids(g, "X3,X4"), ids(g, "X1,X2")}, 6);
    CHECK(ce.graphical);
    CHECK(ce.numeric_det == doctest::Approx(8.0));
    CHECK_FALSE(ce.numeric_zero);
    CHECK_FALSE(ce.consistent);
}

TEST_CASE("axis ordering sensitivity") {
    auto s = counterexample_sem();
    const auto& g = s.graph();
    auto rot = odd_dim_axis_sensitivity(s, {ids(g, "X5,X6"), ids(g, "X3,X4"), ids(g, "X1,X2")});
    REQUIRE(rot.size() == 3);
    CHECK(rot[0].order == std::vector<int>{0, 1, 2});
    CHECK(rot[0].det == doctest::Approx(8.0));
    CHECK(std::any_of(rot.begin() + 1, rot.end(), [](const AxisOrdering& o) { return std::abs(o.det) < 1e-12; }));

    // same set on every axis: the subtensor is symmetric and every rotation agrees
    auto sym = odd_dim_axis_sensitivity(s, {ids(g, "X5,X6"), ids(g, "X5,X6"), ids(g, "X5,X6")});
    CHECK(sym[1].det == doctest::Approx(sym[0].det));
    CHECK(sym[2].det == doctest::Approx(sym[0].det));

    LinearSem gauss(g, s.coefficients(), std::vector<NoiseSpec>(g.size(), NoiseSpec::gaussian(0, 1)));
    for (const auto& o : odd_dim_axis_sensitivity(gauss, {ids(g, "X5,X6"), ids(g, "X3,X4"), ids(g, "X1,X2")}))
        CHECK(o.det == 0);
}

TEST_CASE("k-trek separated sets have a vanishing fourth-order determinant") {
    // one latent over all four observed sets: L alone separates, 1 < n = 2
    auto g = make_graph("L>X1,X2,X3,X4,X5,X6,X7; X1>X2");
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        auto s = lc::sem::random_sem(g, lc::sem::CoefficientRegime::moderate, NoiseSpec::shifted_exponential(1), seed);
        auto c = tensor_constraint_check(s, {ids(g, "X1,X3"), ids(g, "X4,X5"), ids(g, "X6,X7"), ids(g, "X2,X3")}, 6);
        CHECK(c.graphical);
        CHECK(std::abs(c.numeric_det) < 1e-9);
    }
}

TEST_CASE("a vanishing covariance minor extends to a vanishing fourth-order determinant") {
    int tested = 0;
    for (std::uint64_t gs = 0; gs < 40 && tested < 10; ++gs) {
        auto g = lc::graph::random_dag(7, 2.5, lc::util::mix_seed(44, gs));
        auto s = lc::sem::random_sem(g, lc::sem::CoefficientRegime::moderate, NoiseSpec::shifted_exponential(1), gs);
        lc::graph::VertexSet S1{0, 1}, S2{5, 6};
        auto cov = implied_covariance(s);
        if (!lc::stats::rank_test_population(cov, S1, S2, 1).independent()) continue;
        auto c4 = tensor_constraint_check(s, {S1, S2, {2, 3}, {3, 4}}, 6);
        CHECK(c4.numeric_zero);
        ++tested;
    }
    CHECK(tested >= 5);
}

TEST_CASE("sample third cumulants converge to the implied tensor") {
    auto star = load_graph("three_star");
    auto s = lc::sem::random_sem(star, lc::sem::CoefficientRegime::moderate, NoiseSpec::shifted_exponential(1), 6);
    auto t = lc::sem::implied_cumulant_tensor(s, 3);
    auto d = lc::sem::sample(s, 1000000, 7);
    int nonzero = 0;
    for (int i = 0; i < 4; ++i)
        for (int j = i; j < 4; ++j)
            for (int k = j; k < 4; ++k) {
                const double pop = t.at({i, j, k});
                if (std::abs(pop) < 1e-9) continue;
                ++nonzero;
                CHECK(lc::stats::sample_cumulant(d, {i, j, k}) == doctest::Approx(pop).epsilon(0.05));
            }
    CHECK(nonzero == 20);
}

TEST_CASE("tensor JSON round trip") {
    auto t = random_tensor(3, 2, 4);
    t.labels = {{3, 4}, {5, 6}, {7, 8}};
    auto back = tensor_from_json(tensor_to_json(t));
    CHECK(back.order == 3);
    CHECK(back.dim == 2);
    CHECK(back.labels == t.labels);
    CHECK(back.values == t.values);
    CHECK_THROWS(tensor_from_json(nlohmann::json{{"order", 2}, {"dim", 2}, {"values", {1.0}}}));
}
