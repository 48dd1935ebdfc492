#include "naenc/autograd.hpp"

#include <unordered_set>

#include "naenc/errors.hpp"

namespace naenc {

void backward(const VarPtr& root) {
    if (!root) {
        throw Error("backward called on a null node");
    }

    // Iterative post-order DFS; recursion would overflow on long chains.
    std::vector<Var*> order;
    std::unordered_set<Var*> visited;
    std::vector<std::pair<Var*, std::size_t>> stack;
    stack.emplace_back(root.get(), 0);
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, next_child] = stack.back();
        if (next_child < node->parents.size()) {
            Var* child = node->parents[next_child].get();
            ++next_child;
            if (child && visited.insert(child).second) {
                stack.emplace_back(child, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    for (Var* node : order) {
        node->value.zero_grad();
    }
    for (real& g : root->value.grad()) {
        g = real(1);
    }

    // order is post-order, so iterating backwards visits every node before
    // its parents.
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Var* node = *it;
        if (node->backward_fn && node->requires_grad) {
            node->backward_fn(*node);
        }
    }
}

} // namespace naenc
