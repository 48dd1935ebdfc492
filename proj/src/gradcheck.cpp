#include "naenc/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "naenc/errors.hpp"
#include "naenc/rng.hpp"

namespace naenc {

GradCheckReport finite_diff_check(const std::function<VarPtr()>& loss_builder,
                                  std::vector<NamedParam>& params,
                                  real step,
                                  real tolerance,
                                  std::size_t max_coords_per_param,
                                  std::uint64_t seed) {
    if (step <= real(0)) {
        throw ConfigError("finite_diff_check: step must be positive");
    }

    VarPtr loss = loss_builder();
    if (loss->value.size() != 1) {
        throw ShapeError("finite_diff_check: loss is not a scalar");
    }
    // parameters outside the loss graph keep stale slots otherwise
    for (NamedParam& p : params) {
        p.var->value.zero_grad();
    }
    backward(loss);

    std::vector<std::vector<real>> analytic(params.size());
    for (std::size_t p = 0; p < params.size(); ++p) {
        analytic[p] = params[p].var->value.grad();
    }
    loss.reset();

    Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
    GradCheckReport report;
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor& tensor = params[p].var->value;
        std::vector<std::size_t> coords(tensor.size());
        for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
        if (max_coords_per_param != 0 && coords.size() > max_coords_per_param) {
            rng.shuffle(coords);
            coords.resize(max_coords_per_param);
            std::sort(coords.begin(), coords.end());
        }

        for (std::size_t index : coords) {
            const real saved = tensor.at(index);
            tensor.at(index) = saved + step;
            const real up = loss_builder()->value.at(0);
            tensor.at(index) = saved - step;
            const real down = loss_builder()->value.at(0);
            tensor.at(index) = saved;

            const real numeric = (up - down) / (real(2) * step);
            const real a = analytic[p][index];
            const real denom = std::max({real(1), std::fabs(a), std::fabs(numeric)});
            const real rel = std::fabs(a - numeric) / denom;

            report.coords_checked += 1;
            report.max_relative_error = std::max(report.max_relative_error, rel);
            if (rel > tolerance) {
                report.failures.push_back({params[p].name, index, a, numeric, rel});
            }
        }
    }
    return report;
}

} // namespace naenc
