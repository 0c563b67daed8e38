#include "latentcycle/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "latentcycle/error.hpp"

namespace lc::tensor {

CumulantTensor subtensor(const CumulantTensor& t, const std::vector<std::vector<int>>& S) {
    require(static_cast<int>(S.size()) == t.order, "one index set per axis is required");
    const int m = static_cast<int>(S[0].size());
    for (const auto& s : S) {
        require(static_cast<int>(s.size()) == m, "all index sets must have equal size");
        for (int i : s) require(i >= 0 && i < t.dim, "subtensor index out of range");
    }
    CumulantTensor out(t.order, m);
    for (int a = 0; a < t.order; ++a) {
        std::vector<int> lab;
        for (int i : S[a]) lab.push_back(t.labels.empty() ? i : t.labels[a][i]);
        out.labels.push_back(lab);
    }
    std::vector<int> idx(t.order), src(t.order);
    for (std::size_t flat = 0; flat < out.values.size(); ++flat) {
        std::size_t r = flat;
        for (int a = t.order - 1; a >= 0; --a) {
            idx[a] = static_cast<int>(r % m);
            r /= m;
        }
        for (int a = 0; a < t.order; ++a) src[a] = S[a][idx[a]];
        out.values[flat] = t.at(src);
    }
    return out;
}

namespace {

struct Perm {
    std::vector<int> p;
    int sign;
};

std::vector<Perm> all_permutations(int n) {
    std::vector<Perm> out;
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 0);
    do {
        int inv = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) inv += p[i] > p[j];
        out.push_back({p, inv % 2 ? -1 : 1});
    } while (std::next_permutation(p.begin(), p.end()));
    return out;
}

}  // namespace

double hyperdeterminant(const CumulantTensor& t, const HyperdetLimits& limits) {
    const int k = t.order, n = t.dim;
    require(k >= 2, "hyperdeterminant needs order >= 2");
    const int cap = k == 2 ? limits.max_dim_matrix : limits.max_dim_high_order;
    if (n > cap)
        fail(ErrorKind::resource, "hyperdeterminant of order " + std::to_string(k) + " with dimension " +
                                      std::to_string(n) + " exceeds the cap of " + std::to_string(cap) +
                                      " (cost grows as (n!)^(k-1)); raise HyperdetLimits to override");
    if (n == 0) return 1.0;
    const auto perms = all_permutations(n);
    const std::size_t np = perms.size();
    // odometer over (s2..sk); fixed order keeps the sum bit-reproducible
    std::vector<std::size_t> choice(k - 1, 0);
    std::vector<int> idx(k);
    double total = 0.0;
    while (true) {
        int sign = 1;
        for (std::size_t c : choice) sign *= perms[c].sign;
        double prod = 1.0;
        for (int i = 0; i < n && prod != 0.0; ++i) {
            idx[0] = i;
            for (int a = 1; a < k; ++a) idx[a] = perms[choice[a - 1]].p[i];
            prod *= t.at(idx);
        }
        total += sign * prod;
        int a = k - 2;
        while (a >= 0 && ++choice[a] == np) choice[a--] = 0;
        if (a < 0) break;
    }
    return total;
}

double zero_tolerance(const CumulantTensor& t) { return 1e-9 * (1.0 + std::pow(t.max_abs(), t.dim)); }

CumulantTensor implied_subtensor(const sem::LinearSem& sem, const std::vector<graph::VertexSet>& S) {
    const int k = static_cast<int>(S.size());
    require(k >= 2 && k <= 4, "tensor constraints are supported for k in {2,3,4}");
    const int m = static_cast<int>(S[0].size());
    for (const auto& s : S) {
        require(static_cast<int>(s.size()) == m, "all sets must have equal size");
        for (int v : s) require(v >= 0 && v < sem.size(), "vertex id out of range");
    }
    CumulantTensor t(k, m);
    t.labels.assign(S.begin(), S.end());
    std::vector<int> idx(k), src(k);
    for (std::size_t flat = 0; flat < t.values.size(); ++flat) {
        std::size_t r = flat;
        for (int a = k - 1; a >= 0; --a) {
            idx[a] = static_cast<int>(r % m);
            r /= m;
        }
        for (int a = 0; a < k; ++a) src[a] = S[a][idx[a]];
        t.values[flat] = sem::implied_cumulant(sem, src);
    }
    return t;
}

ConstraintCheck tensor_constraint_check(const sem::LinearSem& sem, const std::vector<graph::VertexSet>& S,
                                        int len_cap, const graph::SearchLimits& limits) {
    ConstraintCheck c;
    CumulantTensor t = implied_subtensor(sem, S);
    c.numeric_det = hyperdeterminant(t);
    c.tolerance = zero_tolerance(t);
    c.numeric_zero = std::abs(c.numeric_det) < c.tolerance;
    c.graphical = graph::every_ktrek_system_has_sided_intersection(sem.graph(), S, len_cap, limits);
    c.consistent = c.graphical == c.numeric_zero;
    return c;
}

std::vector<AxisOrdering> odd_dim_axis_sensitivity(const sem::LinearSem& sem,
                                                   const std::vector<graph::VertexSet>& S) {
    require(S.size() == 3, "axis sensitivity is defined for three sets");
    std::vector<AxisOrdering> out;
    for (int shift = 0; shift < 3; ++shift) {
        AxisOrdering o;
        std::vector<graph::VertexSet> rotated;
        for (int a = 0; a < 3; ++a) {
            o.order.push_back((a + shift) % 3);
            rotated.push_back(S[(a + shift) % 3]);
        }
        o.det = hyperdeterminant(implied_subtensor(sem, rotated));
        out.push_back(o);
    }
    return out;
}

nlohmann::json tensor_to_json(const CumulantTensor& t) {
    return {{"order", t.order}, {"dim", t.dim}, {"labels", t.labels}, {"values", t.values}};
}

CumulantTensor tensor_from_json(const nlohmann::json& j) {
    CumulantTensor t(j.at("order").get<int>(), j.at("dim").get<int>());
    auto values = j.at("values").get<std::vector<double>>();
    require(values.size() == t.values.size(), "tensor JSON has the wrong number of values");
    t.values = std::move(values);
    if (j.contains("labels")) t.labels = j.at("labels").get<std::vector<std::vector<int>>>();
    return t;
}

}  // namespace lc::tensor
