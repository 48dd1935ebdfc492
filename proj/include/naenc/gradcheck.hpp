#pragma once

#include <functional>
#include <string>
#include <vector>

#include "naenc/autograd.hpp"

namespace naenc {

struct GradCheckCoord {
    std::string param_name;
    std::size_t index = 0;
    real analytic = 0;
    real numeric = 0;
    real relative_error = 0;
};

struct GradCheckReport {
    real max_relative_error = 0;
    std::size_t coords_checked = 0;
    std::vector<GradCheckCoord> failures; // coords whose error exceeds the tolerance

    bool ok() const { return failures.empty(); }
};

// Central finite differences against the backward pass. `loss_builder` must
// rebuild the loss graph from the current parameter values every call and be
// deterministic. The relative error per coordinate is
//   |analytic - numeric| / max(1, |analytic|, |numeric|)
// which behaves as an absolute tolerance near zero gradients, where the
// central difference itself carries rounding noise.
// `max_coords_per_param` caps the sampled coordinates per parameter (0 means
// every coordinate); sampling is seeded and deterministic.
GradCheckReport finite_diff_check(const std::function<VarPtr()>& loss_builder,
                                  std::vector<NamedParam>& params,
                                  real step,
                                  real tolerance,
                                  std::size_t max_coords_per_param = 0,
                                  std::uint64_t seed = 0);

} // namespace naenc
