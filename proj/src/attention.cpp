#include "naenc/attention.hpp"

#include <cmath>
#include <limits>

#include "naenc/errors.hpp"

namespace naenc {

namespace {
constexpr real kNegInf = -std::numeric_limits<real>::infinity();
}

const char* attention_variant_name(AttentionVariant variant) {
    switch (variant) {
        case AttentionVariant::kSelfAttention: return "SA";
        case AttentionVariant::kNeighborAware: return "NAA";
        case AttentionVariant::kRelativeQK: return "REL_QK";
        case AttentionVariant::kRelativeQV: return "REL_QV";
    }
    return "?";
}

void AttentionConfig::validate() const {
    if (hidden_size == 0 || num_heads == 0 || head_size == 0) {
        throw ConfigError("attention: hidden_size, num_heads and head_size must be positive");
    }
    if (num_heads * head_size != hidden_size) {
        throw ConfigError("attention: num_heads * head_size (" + std::to_string(num_heads) + " * " +
                          std::to_string(head_size) + ") must equal hidden_size " +
                          std::to_string(hidden_size));
    }
    const bool relative = variant == AttentionVariant::kRelativeQK || variant == AttentionVariant::kRelativeQV;
    if (relative && max_relative_distance == 0) {
        throw ConfigError("attention: relative variants need max_relative_distance >= 1");
    }
}

Tensor build_neighbor_mask(std::size_t length) {
    if (length == 0) {
        throw LengthError("neighbor mask: sequence is empty");
    }
    Tensor mask = Tensor::full({length, length}, real(1));
    for (std::size_t i = 0; i < length; ++i) {
        mask.at(i, i) = real(0);
    }
    return mask;
}

Tensor build_additive_mask(std::size_t length, const PaddingMask* padding, bool exclude_diagonal) {
    if (length == 0) {
        throw LengthError("attention mask: sequence is empty");
    }
    if (padding && padding->size() != length) {
        throw ShapeError("padding mask length " + std::to_string(padding->size()) +
                         " does not match sequence length " + std::to_string(length));
    }
    Tensor mask({length, length});
    for (std::size_t i = 0; i < length; ++i) {
        for (std::size_t j = 0; j < length; ++j) {
            const bool padded_key = padding && !(*padding)[j];
            const bool diagonal = exclude_diagonal && i == j;
            if (padded_key || diagonal) {
                mask.at(i, j) = kNegInf;
            }
        }
    }
    return mask;
}

VarPtr multi_head_attention(const VarPtr& hidden,
                            const AttentionWeights& weights,
                            const PaddingMask* padding,
                            const AttentionConfig& config,
                            Rng* dropout_rng) {
    config.validate();
    if (hidden->value.rank() != 2 || hidden->value.cols() != config.hidden_size) {
        throw ShapeError("attention: input " + hidden->value.shape_string() + " does not match hidden size " +
                         std::to_string(config.hidden_size));
    }
    const std::size_t length = hidden->value.rows();
    const bool neighbor = config.variant == AttentionVariant::kNeighborAware;
    const Tensor additive = build_additive_mask(length, padding, neighbor);

    VarPtr q = ops::matmul(hidden, weights.w_query);
    VarPtr k = ops::matmul(hidden, weights.w_key);
    VarPtr v = ops::matmul(hidden, weights.w_value);

    const real inv_sqrt_dk = real(1) / std::sqrt(static_cast<real>(config.head_size));
    std::vector<VarPtr> contexts;
    contexts.reserve(config.num_heads);
    for (std::size_t h = 0; h < config.num_heads; ++h) {
        const std::size_t begin = h * config.head_size;
        VarPtr qh = ops::slice_cols(q, begin, config.head_size);
        VarPtr kh = ops::slice_cols(k, begin, config.head_size);
        VarPtr vh = ops::slice_cols(v, begin, config.head_size);

        VarPtr scores = ops::matmul_nt(qh, kh);
        if (config.variant == AttentionVariant::kRelativeQK) {
            if (!weights.relative_keys) {
                throw ConfigError("attention: REL_QK variant without a relative key table");
            }
            scores = ops::add(scores, ops::relative_scores(qh, weights.relative_keys,
                                                           config.max_relative_distance));
        }
        scores = ops::scale(scores, inv_sqrt_dk);

        VarPtr probs = ops::softmax_rows(scores, &additive);
        if (dropout_rng && config.attention_dropout > real(0)) {
            probs = ops::dropout(probs, config.attention_dropout, *dropout_rng);
        }

        VarPtr context = ops::matmul(probs, vh);
        if (config.variant == AttentionVariant::kRelativeQV) {
            if (!weights.relative_values) {
                throw ConfigError("attention: REL_QV variant without a relative value table");
            }
            context = ops::add(context, ops::relative_context(probs, weights.relative_values,
                                                              config.max_relative_distance));
        }
        contexts.push_back(std::move(context));
    }

    return ops::matmul(ops::concat_cols(contexts), weights.w_output);
}

VarPtr self_attention(const VarPtr& hidden, const AttentionWeights& weights,
                      const PaddingMask* padding, const AttentionConfig& config, Rng* dropout_rng) {
    AttentionConfig c = config;
    c.variant = AttentionVariant::kSelfAttention;
    return multi_head_attention(hidden, weights, padding, c, dropout_rng);
}

VarPtr neighbor_aware_attention(const VarPtr& hidden, const AttentionWeights& weights,
                                const PaddingMask* padding, const AttentionConfig& config,
                                Rng* dropout_rng) {
    AttentionConfig c = config;
    c.variant = AttentionVariant::kNeighborAware;
    return multi_head_attention(hidden, weights, padding, c, dropout_rng);
}

VarPtr relative_position_attention(const VarPtr& hidden, const AttentionWeights& weights,
                                   AttentionVariant mode, const PaddingMask* padding,
                                   const AttentionConfig& config, Rng* dropout_rng) {
    if (mode != AttentionVariant::kRelativeQK && mode != AttentionVariant::kRelativeQV) {
        throw ConfigError("relative_position_attention: mode must be REL_QK or REL_QV");
    }
    AttentionConfig c = config;
    c.variant = mode;
    return multi_head_attention(hidden, weights, padding, c, dropout_rng);
}

} // namespace naenc
