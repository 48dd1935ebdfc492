#include "naenc/encoder.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "naenc/errors.hpp"

namespace naenc {

namespace {
constexpr real kNegInf = -std::numeric_limits<real>::infinity();

const char* sublayer_name(Sublayer s) {
    switch (s) {
        case Sublayer::kSA: return "SA";
        case Sublayer::kNAA: return "NAA";
        case Sublayer::kFFN: return "FFN";
    }
    return "?";
}
} // namespace

std::vector<Sublayer> parse_sublayer_order(const std::string& text) {
    std::vector<Sublayer> order;
    std::string token;
    auto flush = [&] {
        if (token.empty()) return;
        if (token == "SA") order.push_back(Sublayer::kSA);
        else if (token == "NAA") order.push_back(Sublayer::kNAA);
        else if (token == "FFN") order.push_back(Sublayer::kFFN);
        else throw ConfigError("unknown sub-layer '" + token + "' in order '" + text + "'");
        token.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == ',' || c == '>' || c == ' ') {
            flush();
        } else if (c == '-') {
            // part of "->"
            flush();
        } else {
            token.push_back(c);
        }
    }
    flush();
    if (order.empty()) {
        throw ConfigError("empty sub-layer order '" + text + "'");
    }
    return order;
}

std::string sublayer_order_string(const std::vector<Sublayer>& order) {
    std::ostringstream out;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i) out << "->";
        out << sublayer_name(order[i]);
    }
    return out.str();
}

void EncoderStackConfig::validate() const {
    if (num_layers == 0) throw ConfigError("encoder: num_layers must be positive");
    if (sublayer_order.empty()) throw ConfigError("encoder: sub-layer order is empty");
    if (sublayer_order.back() != Sublayer::kFFN) {
        throw ConfigError("encoder: sub-layer order must end with FFN, got " +
                          sublayer_order_string(sublayer_order));
    }
    if (hidden_size == 0 || ffn_inner_size == 0 || num_heads == 0) {
        throw ConfigError("encoder: dimensions must be positive");
    }
    if (hidden_size % num_heads != 0) {
        throw ConfigError("encoder: hidden_size " + std::to_string(hidden_size) +
                          " is not divisible by num_heads " + std::to_string(num_heads));
    }
    if (dropout_rate < real(0) || dropout_rate >= real(1)) {
        throw ConfigError("encoder: dropout_rate must lie in [0, 1)");
    }
    if (max_sequence_length == 0) throw ConfigError("encoder: max_sequence_length must be positive");
    if (vocab_size == 0) throw ConfigError("encoder: vocab_size must be positive");
    attention_config(Sublayer::kSA).validate();
}

AttentionConfig EncoderStackConfig::attention_config(Sublayer kind) const {
    AttentionConfig cfg;
    cfg.hidden_size = hidden_size;
    cfg.num_heads = num_heads;
    cfg.head_size = head_size();
    cfg.variant = kind == Sublayer::kNAA ? AttentionVariant::kNeighborAware : self_attention_variant;
    cfg.max_relative_distance = max_relative_distance;
    cfg.attention_dropout = dropout_on_attention_probs ? dropout_rate : real(0);
    return cfg;
}

std::string EncoderStackConfig::to_json() const {
    nlohmann::json j;
    j["num_layers"] = num_layers;
    j["sublayer_order"] = sublayer_order_string(sublayer_order);
    j["hidden_size"] = hidden_size;
    j["ffn_inner_size"] = ffn_inner_size;
    j["num_heads"] = num_heads;
    j["dropout_rate"] = dropout_rate;
    j["max_sequence_length"] = max_sequence_length;
    j["vocab_size"] = vocab_size;
    j["self_attention_variant"] = attention_variant_name(self_attention_variant);
    j["max_relative_distance"] = max_relative_distance;
    j["dropout_on_attention_probs"] = dropout_on_attention_probs;
    j["dropout_on_sublayer_output"] = dropout_on_sublayer_output;
    j["layer_norm_eps"] = layer_norm_eps;
    return j.dump();
}

EncoderStackConfig EncoderStackConfig::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    EncoderStackConfig c;
    c.num_layers = j.at("num_layers").get<std::size_t>();
    c.sublayer_order = parse_sublayer_order(j.at("sublayer_order").get<std::string>());
    c.hidden_size = j.at("hidden_size").get<std::size_t>();
    c.ffn_inner_size = j.at("ffn_inner_size").get<std::size_t>();
    c.num_heads = j.at("num_heads").get<std::size_t>();
    c.dropout_rate = j.at("dropout_rate").get<real>();
    c.max_sequence_length = j.at("max_sequence_length").get<std::size_t>();
    c.vocab_size = j.at("vocab_size").get<std::size_t>();
    const std::string variant = j.at("self_attention_variant").get<std::string>();
    if (variant == "SA") c.self_attention_variant = AttentionVariant::kSelfAttention;
    else if (variant == "REL_QK") c.self_attention_variant = AttentionVariant::kRelativeQK;
    else if (variant == "REL_QV") c.self_attention_variant = AttentionVariant::kRelativeQV;
    else throw ConfigError("unknown self_attention_variant '" + variant + "'");
    c.max_relative_distance = j.at("max_relative_distance").get<std::size_t>();
    c.dropout_on_attention_probs = j.at("dropout_on_attention_probs").get<bool>();
    c.dropout_on_sublayer_output = j.at("dropout_on_sublayer_output").get<bool>();
    c.layer_norm_eps = j.at("layer_norm_eps").get<real>();
    return c;
}

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    for (const NamedParam& p : registry) {
        n += p.var->value.size();
    }
    return n;
}

namespace {

class Initializer {
public:
    Initializer(std::uint64_t seed, std::vector<NamedParam>& registry)
        : seed_(seed), registry_(registry) {}

    VarPtr truncated_normal(const std::string& name, std::vector<std::size_t> shape, real stddev = 0.02) {
        Rng rng(fnv1a64(name) ^ (seed_ * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull));
        Tensor t(std::move(shape));
        for (real& v : t.values()) {
            v = static_cast<real>(rng.truncated_normal(stddev));
        }
        return registered(name, std::move(t));
    }

    VarPtr constant(const std::string& name, std::vector<std::size_t> shape, real value) {
        return registered(name, Tensor::full(std::move(shape), value));
    }

private:
    VarPtr registered(const std::string& name, Tensor t) {
        VarPtr var = Var::parameter(std::move(t), name);
        registry_.push_back({name, var});
        return var;
    }

    std::uint64_t seed_;
    std::vector<NamedParam>& registry_;
};

} // namespace

ModelParams build_model(const EncoderStackConfig& config, std::uint64_t seed) {
    config.validate();
    const std::size_t d = config.hidden_size;

    ModelParams params;
    Initializer init(seed, params.registry);

    params.token_embeddings = init.truncated_normal("embeddings.token", {config.vocab_size, d});
    params.position_embeddings = init.truncated_normal("embeddings.position", {config.max_sequence_length, d});

    params.blocks.resize(config.num_layers);
    for (std::size_t b = 0; b < config.num_layers; ++b) {
        // Sub-layers are named by the k-th occurrence of their kind within
        // the block, not by slot index, so "block0.sa1" means the same
        // tensor across different stacking orders.
        std::size_t sa_count = 0, naa_count = 0, ffn_count = 0;
        for (Sublayer kind : config.sublayer_order) {
            SublayerParams sub;
            sub.kind = kind;
            std::string base = "block" + std::to_string(b) + ".";
            switch (kind) {
                case Sublayer::kSA: base += "sa" + std::to_string(++sa_count); break;
                case Sublayer::kNAA: base += "naa" + std::to_string(++naa_count); break;
                case Sublayer::kFFN: base += "ffn" + std::to_string(++ffn_count); break;
            }
            if (kind == Sublayer::kFFN) {
                sub.ffn.w_inner = init.truncated_normal(base + ".w_inner", {d, config.ffn_inner_size});
                sub.ffn.b_inner = init.constant(base + ".b_inner", {config.ffn_inner_size}, 0);
                sub.ffn.w_outer = init.truncated_normal(base + ".w_outer", {config.ffn_inner_size, d});
                sub.ffn.b_outer = init.constant(base + ".b_outer", {d}, 0);
            } else {
                sub.attention.w_query = init.truncated_normal(base + ".w_query", {d, d});
                sub.attention.w_key = init.truncated_normal(base + ".w_key", {d, d});
                sub.attention.w_value = init.truncated_normal(base + ".w_value", {d, d});
                sub.attention.w_output = init.truncated_normal(base + ".w_output", {d, d});
                const AttentionVariant variant = config.attention_config(kind).variant;
                const std::size_t table_rows = 2 * config.max_relative_distance + 1;
                if (variant == AttentionVariant::kRelativeQK) {
                    sub.attention.relative_keys =
                        init.truncated_normal(base + ".relative_keys", {table_rows, config.head_size()});
                } else if (variant == AttentionVariant::kRelativeQV) {
                    sub.attention.relative_values =
                        init.truncated_normal(base + ".relative_values", {table_rows, config.head_size()});
                }
            }
            sub.norm.gamma = init.constant(base + ".norm.gamma", {d}, 1);
            sub.norm.beta = init.constant(base + ".norm.beta", {d}, 0);
            params.blocks[b].sublayers.push_back(std::move(sub));
        }
    }

    params.mlm_output_bias = init.constant("mlm.output_bias", {config.vocab_size}, 0);
    params.qa_start_vector = init.truncated_normal("qa.start_vector", {d, 1});
    params.qa_end_vector = init.truncated_normal("qa.end_vector", {d, 1});
    return params;
}

namespace {

VarPtr run_sublayer(const VarPtr& x, const SublayerParams& sub, const PaddingMask* padding,
                    const EncoderStackConfig& config, const ForwardMode& mode) {
    Rng* rng = (mode.training && config.dropout_rate > real(0)) ? mode.rng : nullptr;
    if (mode.training && config.dropout_rate > real(0) && rng == nullptr) {
        throw ConfigError("training forward with dropout needs an rng");
    }

    VarPtr out;
    if (sub.kind == Sublayer::kFFN) {
        VarPtr inner = ops::gelu(ops::add_row_broadcast(ops::matmul(x, sub.ffn.w_inner), sub.ffn.b_inner));
        out = ops::add_row_broadcast(ops::matmul(inner, sub.ffn.w_outer), sub.ffn.b_outer);
    } else {
        out = multi_head_attention(x, sub.attention, padding, config.attention_config(sub.kind), rng);
    }
    if (rng && config.dropout_on_sublayer_output) {
        out = ops::dropout(out, config.dropout_rate, *rng);
    }
    return ops::layer_norm(ops::add(x, out), sub.norm.gamma, sub.norm.beta, config.layer_norm_eps);
}

} // namespace

VarPtr encode_sequence(const std::vector<TokenId>& token_ids,
                       const PaddingMask* padding,
                       const ModelParams& params,
                       const EncoderStackConfig& config,
                       const ForwardMode& mode) {
    const std::size_t length = token_ids.size();
    if (length == 0) {
        throw LengthError("encode_sequence: empty sequence");
    }
    if (length > config.max_sequence_length) {
        throw LengthError("encode_sequence: sequence length " + std::to_string(length) +
                          " exceeds maximum " + std::to_string(config.max_sequence_length));
    }
    for (TokenId id : token_ids) {
        if (id >= config.vocab_size) {
            throw IndexError("encode_sequence: token id " + std::to_string(id) +
                             " >= vocabulary size " + std::to_string(config.vocab_size));
        }
    }

    VarPtr x = ops::add(ops::embedding_rows(params.token_embeddings, token_ids),
                        ops::slice_rows(params.position_embeddings, 0, length));
    for (const BlockParams& block : params.blocks) {
        for (const SublayerParams& sub : block.sublayers) {
            x = run_sublayer(x, sub, padding, config, mode);
        }
    }
    return x;
}

MlmResult mlm_forward(const std::vector<TokenId>& masked_ids,
                      const std::vector<std::int64_t>& targets,
                      const std::vector<std::size_t>& predict_positions,
                      const ModelParams& params,
                      const EncoderStackConfig& config,
                      const ForwardMode& mode) {
    for (std::size_t pos : predict_positions) {
        if (pos >= masked_ids.size()) {
            throw PlanError("mlm_forward: predict position " + std::to_string(pos) +
                            " outside sequence of length " + std::to_string(masked_ids.size()));
        }
    }
    if (targets.size() != masked_ids.size()) {
        throw PlanError("mlm_forward: target list length " + std::to_string(targets.size()) +
                        " does not match sequence length " + std::to_string(masked_ids.size()));
    }

    VarPtr hidden = encode_sequence(masked_ids, nullptr, params, config, mode);
    // tied output head: logits = H E^T + bias
    VarPtr logits = ops::add_row_broadcast(ops::matmul_nt(hidden, params.token_embeddings),
                                           params.mlm_output_bias);
    MlmResult result;
    result.logits = logits->value;
    result.logits.drop_grad();
    result.loss = ops::cross_entropy_masked(logits, targets, predict_positions);
    return result;
}

QaSpanLogits qa_span_forward(const std::vector<TokenId>& token_ids,
                             std::size_t passage_begin,
                             std::size_t passage_end,
                             const ModelParams& params,
                             const EncoderStackConfig& config,
                             const ForwardMode& mode) {
    const std::size_t length = token_ids.size();
    if (passage_begin >= passage_end || passage_end > length) {
        throw IndexError("qa_span_forward: passage range [" + std::to_string(passage_begin) + ", " +
                         std::to_string(passage_end) + ") invalid for length " + std::to_string(length));
    }

    VarPtr hidden = encode_sequence(token_ids, nullptr, params, config, mode);

    Tensor span_mask({1, length});
    for (std::size_t i = 0; i < length; ++i) {
        span_mask.at(0, i) = (i >= passage_begin && i < passage_end) ? real(0) : kNegInf;
    }

    QaSpanLogits out;
    out.start_row = ops::add_const(ops::transpose(ops::matmul(hidden, params.qa_start_vector)), span_mask);
    out.end_row = ops::add_const(ops::transpose(ops::matmul(hidden, params.qa_end_vector)), span_mask);
    return out;
}

SpanPrediction decode_span(const std::vector<real>& start_logits,
                           const std::vector<real>& end_logits,
                           std::size_t max_answer_len) {
    if (start_logits.size() != end_logits.size() || start_logits.empty()) {
        throw ShapeError("decode_span: logit vectors disagree or are empty");
    }
    if (max_answer_len == 0) {
        throw ConfigError("decode_span: max_answer_len must be positive");
    }
    SpanPrediction best;
    best.score = kNegInf;
    const std::size_t length = start_logits.size();
    for (std::size_t s = 0; s < length; ++s) {
        if (start_logits[s] == kNegInf) continue;
        const std::size_t last = std::min(length - 1, s + max_answer_len - 1);
        for (std::size_t e = s; e <= last; ++e) {
            if (end_logits[e] == kNegInf) continue;
            const real score = start_logits[s] + end_logits[e];
            if (score > best.score) {
                best = {s, e, score};
            }
        }
    }
    if (best.score == kNegInf) {
        throw EvalError("decode_span: no scorable span");
    }
    return best;
}

} // namespace naenc
