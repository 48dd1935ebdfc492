#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "naenc/autograd.hpp"
#include "naenc/rng.hpp"
#include "naenc/tensor.hpp"

namespace naenc::ops {

// ---- forward-only tensor kernels (shared by graph ops and callers that
// ---- do not need gradients) ----

Tensor matmul_value(const Tensor& a, const Tensor& b);
Tensor matmul_nt_value(const Tensor& a, const Tensor& b); // a * b^T
Tensor transpose_value(const Tensor& x);

// Row softmax with optional additive mask (entries 0 or -inf). Rows whose
// entries are all masked come back as zeros, by contract.
Tensor softmax_rows_value(const Tensor& scores, const Tensor* additive_mask);

real gelu_value(real x);

// ---- graph ops ----

VarPtr matmul(const VarPtr& a, const VarPtr& b);
VarPtr matmul_nt(const VarPtr& a, const VarPtr& b); // a * b^T
VarPtr transpose(const VarPtr& x);

VarPtr add(const VarPtr& a, const VarPtr& b);           // same shape
VarPtr add_row_broadcast(const VarPtr& x, const VarPtr& row); // [L x d] + [d]
VarPtr add_const(const VarPtr& x, const Tensor& c);     // constant addend, no grad to c
VarPtr mul(const VarPtr& a, const VarPtr& b);           // elementwise
VarPtr scale(const VarPtr& x, real factor);

VarPtr softmax_rows(const VarPtr& scores, const Tensor* additive_mask = nullptr);
VarPtr layer_norm(const VarPtr& x, const VarPtr& gamma, const VarPtr& beta, real eps);
VarPtr gelu(const VarPtr& x);

// Gather rows of `table` by id; backward scatter-adds into the table.
VarPtr embedding_rows(const VarPtr& table, const std::vector<std::size_t>& ids);

VarPtr slice_rows(const VarPtr& x, std::size_t begin, std::size_t count);
VarPtr slice_cols(const VarPtr& x, std::size_t begin, std::size_t count);
VarPtr concat_cols(const std::vector<VarPtr>& parts);

// Inverted dropout; scales kept entries by 1/(1-rate). Draws one uniform
// per entry from `rng`, so callers own reproducibility via the seed.
VarPtr dropout(const VarPtr& x, real rate, Rng& rng);

// Mean negative log-softmax probability of the target over the predict
// positions only; empty position set gives loss 0. `targets` must hold a
// valid id at every predict position (other rows may carry -1).
VarPtr cross_entropy_masked(const VarPtr& logits,
                            const std::vector<std::int64_t>& targets,
                            const std::vector<std::size_t>& predict_positions);

// Mean of scalar nodes (batch loss aggregation).
VarPtr mean_of(const std::vector<VarPtr>& scalars);

// Sum of every entry, as a scalar.
VarPtr sum_all(const VarPtr& x);

// Shaw-style relative position terms, distances clipped to
// +/- max_distance. `table` has 2*max_distance+1 rows of width d_k.
// relative_scores:  T[i][j] = q[i] . table[clip(j-i)]
// relative_context: C[i]    = sum_j probs[i][j] * table[clip(j-i)]
VarPtr relative_scores(const VarPtr& q_head, const VarPtr& table, std::size_t max_distance);
VarPtr relative_context(const VarPtr& probs, const VarPtr& table, std::size_t max_distance);

} // namespace naenc::ops
