#pragma once
#include <string>
#include <vector>

#include <json.hpp>

#include "latentcycle/cumulant_tensor.hpp"
#include "latentcycle/graph.hpp"
#include "latentcycle/sem.hpp"

namespace lc::tensor {

// axis i restricted to the positions S[i] (order preserved)
CumulantTensor subtensor(const CumulantTensor& t, const std::vector<std::vector<int>>& S);

struct HyperdetLimits {
    int max_dim_high_order = 5;  // k >= 3
    int max_dim_matrix = 9;      // k == 2
};

// combinatorial hyperdeterminant: sum over (s2..sk) of sign(s2)...sign(sk) prod_i t[i, s2(i), ..., sk(i)]
double hyperdeterminant(const CumulantTensor& t, const HyperdetLimits& limits = {});

double zero_tolerance(const CumulantTensor& t);

struct ConstraintCheck {
    bool graphical = false;
    double numeric_det = 0.0;
    double tolerance = 0.0;
    bool numeric_zero = false;
    bool consistent = false;
};

// S are vertex-id sets of equal size; the cumulant order is S.size()
CumulantTensor implied_subtensor(const sem::LinearSem& sem, const std::vector<graph::VertexSet>& S);
ConstraintCheck tensor_constraint_check(const sem::LinearSem& sem, const std::vector<graph::VertexSet>& S,
                                        int len_cap, const graph::SearchLimits& limits = {});

struct AxisOrdering {
    std::vector<int> order;  // which input set sits on each axis
    double det = 0.0;
};
std::vector<AxisOrdering> odd_dim_axis_sensitivity(const sem::LinearSem& sem, const std::vector<graph::VertexSet>& S);

nlohmann::json tensor_to_json(const CumulantTensor& t);
CumulantTensor tensor_from_json(const nlohmann::json& j);

}  // namespace lc::tensor
