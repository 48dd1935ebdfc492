#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "naenc/attention.hpp"
#include "naenc/autograd.hpp"

namespace naenc {

// Sub-layer kinds an encoder block is stacked from.
enum class Sublayer { kSA, kNAA, kFFN };

std::vector<Sublayer> parse_sublayer_order(const std::string& text); // "SA->NAA->FFN" or "SA,NAA,FFN"
std::string sublayer_order_string(const std::vector<Sublayer>& order);

struct EncoderStackConfig {
    std::size_t num_layers = 2;
    std::vector<Sublayer> sublayer_order = {Sublayer::kSA, Sublayer::kNAA, Sublayer::kFFN};
    std::size_t hidden_size = 128;
    std::size_t ffn_inner_size = 512;
    std::size_t num_heads = 4;
    real dropout_rate = 0.1;
    std::size_t max_sequence_length = 128;
    std::size_t vocab_size = 0;

    // what an SA slot instantiates; NAA slots are always neighbor-aware
    AttentionVariant self_attention_variant = AttentionVariant::kSelfAttention;
    std::size_t max_relative_distance = 16;

    // both dropout sites carry the same rate and are individually switchable
    bool dropout_on_attention_probs = true;
    bool dropout_on_sublayer_output = true;

    real layer_norm_eps = 1e-12;

    std::size_t head_size() const { return num_heads == 0 ? 0 : hidden_size / num_heads; }
    void validate() const;

    std::string to_json() const;
    static EncoderStackConfig from_json(const std::string& text);

    AttentionConfig attention_config(Sublayer kind) const;
};

struct FeedForwardParams {
    VarPtr w_inner; // d x d_ff
    VarPtr b_inner; // d_ff
    VarPtr w_outer; // d_ff x d
    VarPtr b_outer; // d
};

struct LayerNormParams {
    VarPtr gamma;
    VarPtr beta;
};

struct SublayerParams {
    Sublayer kind = Sublayer::kFFN;
    AttentionWeights attention; // attention sub-layers
    FeedForwardParams ffn;      // FFN sub-layers
    LayerNormParams norm;       // post-norm after the residual add
};

struct BlockParams {
    std::vector<SublayerParams> sublayers;
};

// Trainable model: embeddings, blocks, MLM bias (the MLM projection is tied
// to the token embedding table), and the QA span vectors. `registry` lists
// every tensor under a stable name; names identify the k-th occurrence of a
// sub-layer kind within its block, so layers shared between two stacking
// orders initialize identically from the same seed.
struct ModelParams {
    VarPtr token_embeddings;    // V x d
    VarPtr position_embeddings; // max_len x d
    std::vector<BlockParams> blocks;
    VarPtr mlm_output_bias; // V
    VarPtr qa_start_vector; // d x 1
    VarPtr qa_end_vector;   // d x 1
    std::vector<NamedParam> registry;

    std::size_t parameter_count() const;
};

using TokenId = std::size_t;

ModelParams build_model(const EncoderStackConfig& config, std::uint64_t seed);

struct ForwardMode {
    bool training = false;
    Rng* rng = nullptr; // required when training and dropout_rate > 0
};

VarPtr encode_sequence(const std::vector<TokenId>& token_ids,
                       const PaddingMask* padding,
                       const ModelParams& params,
                       const EncoderStackConfig& config,
                       const ForwardMode& mode = {});

struct MlmResult {
    VarPtr loss;
    Tensor logits; // L x V snapshot of the prediction scores
};

// `targets` is per-position (-1 where not predicted); every predict
// position must carry the original token id, per the 15% selection rule
// (masked, kept and randomly replaced positions all predict the original).
MlmResult mlm_forward(const std::vector<TokenId>& masked_ids,
                      const std::vector<std::int64_t>& targets,
                      const std::vector<std::size_t>& predict_positions,
                      const ModelParams& params,
                      const EncoderStackConfig& config,
                      const ForwardMode& mode = {});

struct QaSpanLogits {
    VarPtr start_row; // 1 x L, -inf outside the answerable region
    VarPtr end_row;   // 1 x L
};

// Input layout: [CLS] question [SEP] passage [SEP]; the passage occupies
// token positions [passage_begin, passage_end). Question and special
// positions score -inf.
QaSpanLogits qa_span_forward(const std::vector<TokenId>& token_ids,
                             std::size_t passage_begin,
                             std::size_t passage_end,
                             const ModelParams& params,
                             const EncoderStackConfig& config,
                             const ForwardMode& mode = {});

struct SpanPrediction {
    std::size_t start = 0;
    std::size_t end = 0; // inclusive
    real score = 0;
};

// Best (start, end) maximizing start_logit + end_logit subject to
// start <= end <= start + max_answer_len - 1, over finite-scoring positions.
SpanPrediction decode_span(const std::vector<real>& start_logits,
                           const std::vector<real>& end_logits,
                           std::size_t max_answer_len);

} // namespace naenc
