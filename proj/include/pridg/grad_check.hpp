#pragma once

#include <cmath>
#include <functional>

#include "pridg/nn.hpp"

// Central finite-difference verification of reverse-mode gradients. Runs on
// the double instantiation of the layer stack so the oracle is not limited by
// float32 rounding.

namespace pridg::nn {

// `loss` recomputes the scalar objective from current tensor contents.
// `analytic_grad` holds d loss / d tensor for the same point; `tensor.data`
// is perturbed in place. Returns the max relative error over all elements.
inline double finite_diff_max_rel_error(TensorT<double>& tensor,
                                        const std::vector<double>& analytic_grad,
                                        const std::function<double()>& loss,
                                        double epsilon = 1e-3) {
    double worst = 0.0;
    for (std::size_t i = 0; i < tensor.data.size(); ++i) {
        double saved = tensor.data[i];
        tensor.data[i] = saved + epsilon;
        double up = loss();
        tensor.data[i] = saved - epsilon;
        double down = loss();
        tensor.data[i] = saved;
        double numeric = (up - down) / (2.0 * epsilon);
        double denom = std::max({std::abs(numeric), std::abs(analytic_grad[i]), 1e-8});
        worst = std::max(worst, std::abs(numeric - analytic_grad[i]) / denom);
    }
    return worst;
}

// Checks every parameter of `stack` plus the input tensor against central
// differences of `loss`; gradients must already be accumulated (one backward
// pass at the current point). Returns the max relative error.
inline double grad_check(SequentialT<double>& stack, TensorT<double>& input,
                         const std::vector<double>& input_grad,
                         const std::function<double()>& loss, double epsilon = 1e-3) {
    double worst = finite_diff_max_rel_error(input, input_grad, loss, epsilon);
    for (auto* p : stack.params()) worst = std::max(worst, finite_diff_max_rel_error(*p, p->grad, loss, epsilon));
    return worst;
}

}  // namespace pridg::nn
