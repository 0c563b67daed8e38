#pragma once
#include <string>
#include <vector>

namespace lc::tensor {

// Dense order-k tensor with equal extent `dim` on every axis, row-major.
struct CumulantTensor {
    int order = 0;
    int dim = 0;
    std::vector<std::vector<int>> labels;  // variable id per index, per axis
    std::vector<double> values;

    CumulantTensor() = default;
    CumulantTensor(int order, int dim);

    std::size_t offset(const std::vector<int>& idx) const;
    double at(const std::vector<int>& idx) const { return values[offset(idx)]; }
    double& at(const std::vector<int>& idx) { return values[offset(idx)]; }
    double max_abs() const;
};

}  // namespace lc::tensor
