#pragma once

// Test-side reference implementations, kept independent of the library's
// computation paths. Everything here is naive and loop-based on purpose.

#include <cstdint>
#include <vector>

#include "naenc/attention.hpp"
#include "naenc/masking.hpp"
#include "naenc/tensor.hpp"
#include "naenc/tokenizer.hpp"

namespace oracles {

using naenc::Tensor;

// plain triple loop
Tensor naive_matmul(const Tensor& a, const Tensor& b);

// row softmax in long double
std::vector<double> softmax_row(const std::vector<double>& row);

// S_S by per-pair loops (long double accumulation): scores q_i . k_j / sqrt(dk)
Tensor brute_force_scores(const Tensor& q, const Tensor& k);

// the multiplicative neighbor form: softmax the scores, zero the diagonal,
// renormalize each row; rows with no survivors become zero
Tensor mask_then_renormalize(const Tensor& probs);

// full multi-head attention by per-pair loops; `exclude_diagonal` applies
// the neighbor rule inside the row softmax. relative tables may be null.
Tensor attention_by_loops(const Tensor& hidden, const Tensor& w_query, const Tensor& w_key,
                          const Tensor& w_value, const Tensor& w_output, std::size_t num_heads,
                          bool exclude_diagonal, const std::vector<bool>* padding,
                          const Tensor* relative_keys, const Tensor* relative_values,
                          std::size_t max_relative_distance);

// exhaustive O(L^2) span search under the same constraints as the decoder
struct SpanResult {
    std::size_t start;
    std::size_t end;
    double score;
};
SpanResult exhaustive_span_search(const std::vector<double>& start_logits,
                                  const std::vector<double>& end_logits,
                                  std::size_t max_answer_len);

// scalar Adam with decoupled weight decay (decay applied to the pre-update
// parameter), mirroring the documented contract
struct ScalarAdam {
    double m = 0, v = 0;
    std::size_t t = 0;
    double step(double& param, double grad, double lr, double beta1, double beta2, double eps,
                double weight_decay);
};

// single-pass reference of the budgeted three-tier masking selection
naenc::MaskingPlan reference_plan_masking(const naenc::TokenizedSequence& tokens,
                                          const std::vector<naenc::CharSpan>& np_spans,
                                          const naenc::MaskingOptions& options, std::uint64_t seed);

// greedy longest-match wordpiece over one word, marker-aware; empty result
// means no chain fits (the word becomes [UNK])
std::vector<std::string> greedy_wordpiece_pieces(const std::string& word,
                                                 const naenc::Vocabulary& vocab);

// deterministic random tensors for test instances
Tensor random_tensor(std::vector<std::size_t> shape, std::uint64_t seed, double scale = 1.0);

} // namespace oracles
