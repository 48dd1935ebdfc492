#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "naenc/tensor.hpp"

namespace naenc {

class Var;
using VarPtr = std::shared_ptr<Var>;

// One node of the dynamic reverse-mode graph. Gradients accumulate in the
// grad slot of `value`; backward_fn reads it and adds into the parents'
// slots. Leaves have no backward_fn.
class Var {
public:
    static VarPtr leaf(Tensor value, bool requires_grad = false) {
        auto v = std::make_shared<Var>();
        v->value = std::move(value);
        v->requires_grad = requires_grad;
        return v;
    }

    static VarPtr parameter(Tensor value, std::string name = {}) {
        VarPtr v = leaf(std::move(value), true);
        v->name = std::move(name);
        return v;
    }

    Tensor value;
    bool requires_grad = false;
    std::string name; // parameters only; used in diagnostics
    std::vector<VarPtr> parents;
    std::function<void(Var&)> backward_fn;
};

// Named handle into a parameter registry (checkpoints, optimizer
// diagnostics, gradient checks).
struct NamedParam {
    std::string name;
    VarPtr var;
};

// Seeds the root gradient with ones and runs backward functions in reverse
// topological order. The root is normally the scalar loss.
void backward(const VarPtr& root);

} // namespace naenc
