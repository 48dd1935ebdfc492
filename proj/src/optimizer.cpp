#include "naenc/optimizer.hpp"

#include <cmath>

#include "naenc/errors.hpp"

namespace naenc {

void adam_step(std::vector<NamedParam>& params, OptimizerState& state, const AdamConfig& config) {
    if (state.first_moment.empty()) {
        state.first_moment.resize(params.size());
        state.second_moment.resize(params.size());
        for (std::size_t p = 0; p < params.size(); ++p) {
            state.first_moment[p].assign(params[p].var->value.size(), real(0));
            state.second_moment[p].assign(params[p].var->value.size(), real(0));
        }
    }
    if (state.first_moment.size() != params.size()) {
        throw TrainError("optimizer state holds " + std::to_string(state.first_moment.size()) +
                         " parameters, step got " + std::to_string(params.size()));
    }

    state.step_count += 1;
    const real bias1 = real(1) - std::pow(config.beta1, static_cast<real>(state.step_count));
    const real bias2 = real(1) - std::pow(config.beta2, static_cast<real>(state.step_count));

    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor& tensor = params[p].var->value;
        if (state.first_moment[p].size() != tensor.size()) {
            throw TrainError("optimizer state shape mismatch for parameter '" + params[p].name + "'");
        }
        const auto& grad = tensor.grad(); // allocates zeros if backward never touched it
        auto& m = state.first_moment[p];
        auto& v = state.second_moment[p];
        for (std::size_t i = 0; i < tensor.size(); ++i) {
            const real g = grad[i];
            if (!std::isfinite(g)) {
                throw TrainError("non-finite gradient in parameter '" + params[p].name + "'");
            }
            m[i] = config.beta1 * m[i] + (real(1) - config.beta1) * g;
            v[i] = config.beta2 * v[i] + (real(1) - config.beta2) * g * g;
            const real m_hat = m[i] / bias1;
            const real v_hat = v[i] / bias2;
            real& value = tensor.at(i);
            // decay first, against the pre-update value
            value -= config.learning_rate * config.weight_decay * value;
            value -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
        }
    }
}

} // namespace naenc
