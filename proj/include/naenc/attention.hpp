#pragma once

#include <optional>
#include <vector>

#include "naenc/autograd.hpp"
#include "naenc/ops.hpp"

namespace naenc {

enum class AttentionVariant {
    kSelfAttention,
    kNeighborAware,
    kRelativeQK, // relative term added to the pre-softmax scores
    kRelativeQV, // relative term added to the value aggregation
};

const char* attention_variant_name(AttentionVariant variant);

struct AttentionConfig {
    std::size_t hidden_size = 0;
    std::size_t num_heads = 0;
    std::size_t head_size = 0;
    AttentionVariant variant = AttentionVariant::kSelfAttention;
    std::size_t max_relative_distance = 0; // relative variants only

    // dropout on attention probabilities; active only when a training rng
    // is supplied to the forward call
    real attention_dropout = 0;

    void validate() const;
};

// Per-layer projections. Projections are bias-free: Q = H Wq etc. The
// relative tables are engaged only by the matching variant.
struct AttentionWeights {
    VarPtr w_query;  // d x d
    VarPtr w_key;    // d x d
    VarPtr w_value;  // d x d
    VarPtr w_output; // d x d
    VarPtr relative_keys;   // (2k+1) x head_size, kRelativeQK
    VarPtr relative_values; // (2k+1) x head_size, kRelativeQV
};

// true = real token, false = padding; nullptr means nothing is padded.
using PaddingMask = std::vector<bool>;

// The multiplicative neighbor mask: zero diagonal, ones elsewhere. Kept in
// this form as the reference definition; the attention path realizes it as
// a -inf additive sentinel, which is numerically identical whenever a row
// has at least one survivor.
Tensor build_neighbor_mask(std::size_t length);

// Additive mask (0 / -inf entries) combining padding columns with the
// optional diagonal exclusion; this is what softmax_rows consumes.
Tensor build_additive_mask(std::size_t length, const PaddingMask* padding, bool exclude_diagonal);

// Multi-head scaled dot-product attention per the configured variant.
// Rows whose keys are all masked out get a zero context vector.
VarPtr multi_head_attention(const VarPtr& hidden,
                            const AttentionWeights& weights,
                            const PaddingMask* padding,
                            const AttentionConfig& config,
                            Rng* dropout_rng = nullptr);

// Named entry points for the individual variants; all share the projection
// and head plumbing of multi_head_attention.
VarPtr self_attention(const VarPtr& hidden, const AttentionWeights& weights,
                      const PaddingMask* padding, const AttentionConfig& config,
                      Rng* dropout_rng = nullptr);
VarPtr neighbor_aware_attention(const VarPtr& hidden, const AttentionWeights& weights,
                                const PaddingMask* padding, const AttentionConfig& config,
                                Rng* dropout_rng = nullptr);
VarPtr relative_position_attention(const VarPtr& hidden, const AttentionWeights& weights,
                                   AttentionVariant mode, const PaddingMask* padding,
                                   const AttentionConfig& config, Rng* dropout_rng = nullptr);

} // namespace naenc
