#include "latentcycle/cumulant_tensor.hpp"

#include <cmath>

#include "latentcycle/error.hpp"

namespace lc::tensor {

CumulantTensor::CumulantTensor(int order_, int dim_) : order(order_), dim(dim_) {
    require(order >= 1 && dim >= 0, "invalid tensor shape");
    std::size_t n = 1;
    for (int i = 0; i < order; ++i) n *= static_cast<std::size_t>(dim);
    values.assign(n, 0.0);
}

std::size_t CumulantTensor::offset(const std::vector<int>& idx) const {
    std::size_t off = 0;
    for (int a = 0; a < order; ++a) off = off * dim + static_cast<std::size_t>(idx[a]);
    return off;
}

double CumulantTensor::max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace lc::tensor
