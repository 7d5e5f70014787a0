#include "roitr/tensor.hpp"

#include <cmath>

namespace roitr {

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

void Tensor::require_finite(const std::string& context) const {
    if (!all_finite())
        throw NumericError("non-finite values in " + context);
}

}  // namespace roitr
