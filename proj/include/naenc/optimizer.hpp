#pragma once

#include <cstddef>
#include <vector>

#include "naenc/autograd.hpp"

namespace naenc {

struct AdamConfig {
    real learning_rate = 1e-3;
    real beta1 = 0.9;
    real beta2 = 0.999;
    real epsilon = 1e-6;
    real weight_decay = 0.0;
};

// Per-parameter first/second moment estimates. Moments are laid out in the
// order the parameters are first passed to adam_step.
struct OptimizerState {
    std::vector<std::vector<real>> first_moment;
    std::vector<std::vector<real>> second_moment;
    std::size_t step_count = 0;
};

// Bias-corrected Adam with decoupled weight decay: the decay term is applied
// to the parameter directly rather than mixed into the gradient. Reads each
// parameter's gradient slot; throws TrainError naming the parameter on a
// non-finite gradient.
void adam_step(std::vector<NamedParam>& params, OptimizerState& state, const AdamConfig& config);

} // namespace naenc
