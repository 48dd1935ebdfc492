#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "naenc/rng.hpp"

namespace oracles {

using naenc::CharSpan;
using naenc::MaskAction;
using naenc::MaskingOptions;
using naenc::MaskingPlan;
using naenc::MaskTier;
using naenc::Rng;
using naenc::TokenizedSequence;
using naenc::Vocabulary;

Tensor naive_matmul(const Tensor& a, const Tensor& b) {
    Tensor out({a.rows(), b.cols()});
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            long double acc = 0;
            for (std::size_t k = 0; k < a.cols(); ++k) {
                acc += static_cast<long double>(a.at(i, k)) * static_cast<long double>(b.at(k, j));
            }
            out.at(i, j) = static_cast<double>(acc);
        }
    }
    return out;
}

std::vector<double> softmax_row(const std::vector<double>& row) {
    long double row_max = -std::numeric_limits<long double>::infinity();
    for (double v : row) row_max = std::max(row_max, static_cast<long double>(v));
    long double denom = 0;
    std::vector<long double> exps(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) {
        exps[i] = expl(static_cast<long double>(row[i]) - row_max);
        denom += exps[i];
    }
    std::vector<double> out(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) {
        out[i] = static_cast<double>(exps[i] / denom);
    }
    return out;
}

Tensor brute_force_scores(const Tensor& q, const Tensor& k) {
    const std::size_t len = q.rows(), dim = q.cols();
    const long double scale = 1.0L / sqrtl(static_cast<long double>(dim));
    Tensor scores({len, len});
    for (std::size_t i = 0; i < len; ++i) {
        for (std::size_t j = 0; j < len; ++j) {
            long double acc = 0;
            for (std::size_t c = 0; c < dim; ++c) {
                acc += static_cast<long double>(q.at(i, c)) * static_cast<long double>(k.at(j, c));
            }
            scores.at(i, j) = static_cast<double>(acc * scale);
        }
    }
    return scores;
}

Tensor mask_then_renormalize(const Tensor& probs) {
    const std::size_t len = probs.rows();
    Tensor out({len, len});
    for (std::size_t i = 0; i < len; ++i) {
        long double denom = 0;
        for (std::size_t j = 0; j < len; ++j) {
            if (j != i) denom += static_cast<long double>(probs.at(i, j));
        }
        if (denom == 0) continue;
        for (std::size_t j = 0; j < len; ++j) {
            if (j != i) out.at(i, j) = static_cast<double>(probs.at(i, j) / denom);
        }
    }
    return out;
}

Tensor attention_by_loops(const Tensor& hidden, const Tensor& w_query, const Tensor& w_key,
                          const Tensor& w_value, const Tensor& w_output, std::size_t num_heads,
                          bool exclude_diagonal, const std::vector<bool>* padding,
                          const Tensor* relative_keys, const Tensor* relative_values,
                          std::size_t max_relative_distance) {
    const std::size_t len = hidden.rows();
    const std::size_t d = hidden.cols();
    const std::size_t dk = d / num_heads;
    const long double scale = 1.0L / sqrtl(static_cast<long double>(dk));

    const Tensor q = naive_matmul(hidden, w_query);
    const Tensor k = naive_matmul(hidden, w_key);
    const Tensor v = naive_matmul(hidden, w_value);

    auto rel_index = [&](std::size_t i, std::size_t j) {
        const std::int64_t delta = static_cast<std::int64_t>(j) - static_cast<std::int64_t>(i);
        const std::int64_t cap = static_cast<std::int64_t>(max_relative_distance);
        return static_cast<std::size_t>(std::clamp(delta, -cap, cap) + cap);
    };

    Tensor concat({len, d});
    for (std::size_t h = 0; h < num_heads; ++h) {
        const std::size_t off = h * dk;
        for (std::size_t i = 0; i < len; ++i) {
            std::vector<long double> weights(len, 0.0L);
            long double row_max = -std::numeric_limits<long double>::infinity();
            std::vector<bool> alive(len, false);
            for (std::size_t j = 0; j < len; ++j) {
                if (exclude_diagonal && j == i) continue;
                if (padding && !(*padding)[j]) continue;
                long double dot = 0;
                for (std::size_t c = 0; c < dk; ++c) {
                    dot += static_cast<long double>(q.at(i, off + c)) *
                           static_cast<long double>(k.at(j, off + c));
                }
                if (relative_keys) {
                    const std::size_t idx = rel_index(i, j);
                    for (std::size_t c = 0; c < dk; ++c) {
                        dot += static_cast<long double>(q.at(i, off + c)) *
                               static_cast<long double>(relative_keys->at(idx, c));
                    }
                }
                weights[j] = dot * scale;
                alive[j] = true;
                row_max = std::max(row_max, weights[j]);
            }
            long double denom = 0;
            for (std::size_t j = 0; j < len; ++j) {
                if (alive[j]) denom += expl(weights[j] - row_max);
            }
            for (std::size_t c = 0; c < dk; ++c) {
                long double acc = 0;
                for (std::size_t j = 0; j < len; ++j) {
                    if (!alive[j] || denom == 0) continue;
                    const long double p = expl(weights[j] - row_max) / denom;
                    acc += p * static_cast<long double>(v.at(j, off + c));
                    if (relative_values) {
                        acc += p * static_cast<long double>(relative_values->at(rel_index(i, j), c));
                    }
                }
                concat.at(i, off + c) = static_cast<double>(acc);
            }
        }
    }
    return naive_matmul(concat, w_output);
}

SpanResult exhaustive_span_search(const std::vector<double>& start_logits,
                                  const std::vector<double>& end_logits,
                                  std::size_t max_answer_len) {
    SpanResult best{0, 0, -std::numeric_limits<double>::infinity()};
    for (std::size_t s = 0; s < start_logits.size(); ++s) {
        if (std::isinf(start_logits[s]) && start_logits[s] < 0) continue;
        for (std::size_t e = s; e < end_logits.size() && e <= s + max_answer_len - 1; ++e) {
            if (std::isinf(end_logits[e]) && end_logits[e] < 0) continue;
            const double score = start_logits[s] + end_logits[e];
            if (score > best.score) {
                best = {s, e, score};
            }
        }
    }
    return best;
}

double ScalarAdam::step(double& param, double grad, double lr, double beta1, double beta2,
                        double eps, double weight_decay) {
    t += 1;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad * grad;
    const double m_hat = m / (1.0 - std::pow(beta1, static_cast<double>(t)));
    const double v_hat = v / (1.0 - std::pow(beta2, static_cast<double>(t)));
    param -= lr * weight_decay * param;
    param -= lr * m_hat / (std::sqrt(v_hat) + eps);
    return param;
}

MaskingPlan reference_plan_masking(const TokenizedSequence& tokens,
                                   const std::vector<CharSpan>& np_spans,
                                   const MaskingOptions& options, std::uint64_t seed) {
    MaskingPlan plan;
    const std::size_t length = tokens.size();
    const std::size_t target = static_cast<std::size_t>(options.budget * static_cast<double>(length));
    if (target == 0) return plan;

    struct Run {
        MaskTier tier;
        std::vector<std::size_t> positions;
    };

    // noun-phrase runs: maximal stretches of tokens fully inside one span
    std::vector<Run> spans;
    for (const CharSpan& span : np_spans) {
        Run run{MaskTier::kNpSpan, {}};
        for (std::size_t p = 0; p < length; ++p) {
            const bool inside =
                tokens.offsets[p].begin >= span.begin && tokens.offsets[p].end <= span.end;
            if (inside) {
                run.positions.push_back(p);
            } else if (!run.positions.empty()) {
                spans.push_back(run);
                run.positions.clear();
            }
        }
        if (!run.positions.empty()) spans.push_back(run);
    }

    // words of two or more tokens
    std::vector<Run> words;
    {
        Run run{MaskTier::kWholeWord, {}};
        for (std::size_t p = 0; p < length; ++p) {
            if (tokens.word_start[p] && !run.positions.empty()) {
                if (run.positions.size() >= 2) words.push_back(run);
                run.positions.clear();
            }
            run.positions.push_back(p);
        }
        if (run.positions.size() >= 2) words.push_back(run);
    }

    Rng rng(seed);
    std::vector<bool> taken(length, false);
    std::size_t count = 0;
    auto pick = [&](const Run& run) {
        const double u = rng.uniform_real();
        MaskAction action = MaskAction::kRandom;
        if (u < options.mask_ratio) action = MaskAction::kMask;
        else if (u < options.mask_ratio + options.keep_ratio) action = MaskAction::kKeep;
        for (std::size_t p : run.positions) {
            plan.selected.push_back({p, run.tier, action, tokens.ids[p], plan.unit_count});
            taken[p] = true;
        }
        plan.unit_count += 1;
        count += run.positions.size();
    };
    auto free_run = [&](const Run& run) {
        for (std::size_t p : run.positions) {
            if (taken[p]) return false;
        }
        return true;
    };

    if (options.use_span_tier && !np_spans.empty()) {
        rng.shuffle(spans);
        for (const Run& run : spans) {
            if (count >= target) break;
            if (free_run(run)) pick(run);
        }
    }
    if (options.use_whole_word_tier && count < target) {
        rng.shuffle(words);
        for (const Run& run : words) {
            if (count >= target) break;
            if (count + run.positions.size() > target) continue;
            if (free_run(run)) pick(run);
        }
    }
    if (count < target) {
        std::vector<bool> in_word(length, false);
        for (const Run& run : words) {
            for (std::size_t p : run.positions) in_word[p] = true;
        }
        std::vector<std::size_t> singles, fallback;
        for (std::size_t p = 0; p < length; ++p) {
            if (taken[p]) continue;
            (in_word[p] ? fallback : singles).push_back(p);
        }
        rng.shuffle(singles);
        rng.shuffle(fallback);
        for (const std::vector<std::size_t>* pool : {&singles, &fallback}) {
            for (std::size_t p : *pool) {
                if (count >= target) break;
                pick(Run{MaskTier::kToken, {p}});
            }
        }
    }

    std::sort(plan.selected.begin(), plan.selected.end(),
              [](const auto& a, const auto& b) { return a.position < b.position; });
    return plan;
}

std::vector<std::string> greedy_wordpiece_pieces(const std::string& word, const Vocabulary& vocab) {
    std::vector<std::string> pieces;
    std::size_t pos = 0;
    while (pos < word.size()) {
        bool found = false;
        for (std::size_t take = word.size() - pos; take > 0; --take) {
            const std::string candidate = word.substr(pos, take);
            const auto id = pos == 0 ? vocab.find_word_start(candidate)
                                     : vocab.find_continuation(candidate);
            if (id) {
                pieces.push_back(vocab.surface(*id));
                pos += take;
                found = true;
                break;
            }
        }
        if (!found) return {};
    }
    return pieces;
}

Tensor random_tensor(std::vector<std::size_t> shape, std::uint64_t seed, double scale) {
    Rng rng(seed);
    Tensor t(std::move(shape));
    for (auto& v : t.values()) {
        v = (rng.uniform_real() * 2.0 - 1.0) * scale;
    }
    return t;
}

} // namespace oracles
