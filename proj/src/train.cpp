#include "naenc/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "naenc/errors.hpp"

namespace naenc {

real linear_lr(std::size_t step, real peak, std::size_t warmup_steps, std::size_t max_steps) {
    if (max_steps == 0) return 0;
    if (step == 0) step = 1;
    if (warmup_steps > 0 && step <= warmup_steps) {
        return peak * static_cast<real>(step) / static_cast<real>(warmup_steps);
    }
    if (step >= max_steps) return 0;
    if (max_steps <= warmup_steps) return peak;
    return peak * static_cast<real>(max_steps - step) / static_cast<real>(max_steps - warmup_steps);
}

std::string format_real(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

// ---------------------------------------------------------------- example io

std::string PretrainExample::to_json_line() const {
    nlohmann::json j;
    j["token_ids"] = token_ids;
    j["masked_ids"] = masked_ids;
    j["predict_positions"] = predict_positions;
    j["target_ids"] = target_ids;
    return j.dump();
}

PretrainExample PretrainExample::from_json_line(const std::string& line) {
    nlohmann::json j = nlohmann::json::parse(line);
    PretrainExample e;
    e.token_ids = j.at("token_ids").get<std::vector<TokenId>>();
    e.masked_ids = j.at("masked_ids").get<std::vector<TokenId>>();
    e.predict_positions = j.at("predict_positions").get<std::vector<std::size_t>>();
    e.target_ids = j.at("target_ids").get<std::vector<TokenId>>();
    if (e.masked_ids.size() != e.token_ids.size() || e.predict_positions.size() != e.target_ids.size()) {
        throw FormatError("pretrain example: field lengths disagree");
    }
    return e;
}

std::vector<PretrainExample> read_pretrain_examples(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("pretrain examples: cannot open '" + path + "'");
    }
    std::vector<PretrainExample> examples;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        examples.push_back(PretrainExample::from_json_line(line));
    }
    return examples;
}

void write_pretrain_examples(const std::string& path, const std::vector<PretrainExample>& examples) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw FormatError("pretrain examples: cannot open '" + path + "' for writing");
    }
    for (const PretrainExample& e : examples) {
        out << e.to_json_line() << '\n';
    }
}

// ---------------------------------------------------------------- preprocess

MaskingScheme parse_masking_scheme(const std::string& text) {
    if (text == "standard" || text == "standard_mlm") return MaskingScheme::kStandard;
    if (text == "entity") return MaskingScheme::kEntity;
    if (text == "noun_phrase") return MaskingScheme::kNounPhrase;
    throw ConfigError("unknown masking scheme '" + text + "'");
}

ChunkingMode parse_chunking_mode(const std::string& text) {
    if (text == "none" || text == "without_chunking") return ChunkingMode::kNone;
    if (text == "sentence" || text == "sentence_chunking") return ChunkingMode::kSentence;
    if (text == "sentence_overlap_128" || text == "overlap_128") return ChunkingMode::kSentenceOverlap128;
    throw ConfigError("unknown chunking mode '" + text + "'");
}

PreprocessResult preprocess_corpus(const std::vector<Document>& docs,
                                   const Vocabulary& vocab,
                                   const CleanRules& rules,
                                   const PosLexicon& lexicon,
                                   const PreprocessOptions& options) {
    PreprocessResult result;

    std::vector<Document> cleaned;
    if (options.skip_cleaning) {
        cleaned = docs;
    } else {
        cleaned = clean_corpus(docs, rules, result.counters);
    }

    for (const Document& doc : cleaned) {
        std::vector<Chunk> chunks;
        if (options.chunking == ChunkingMode::kNone) {
            chunks.push_back({doc.text, 0});
        } else {
            ChunkOptions copt;
            copt.max_words = options.chunk_max_words;
            copt.overlap_tokens = options.chunking == ChunkingMode::kSentenceOverlap128 ? 128 : 0;
            chunks = chunk_document(doc, copt);
        }

        const std::uint64_t doc_seed = fnv1a64(doc.id) ^ options.seed;
        for (std::size_t c = 0; c < chunks.size(); ++c) {
            const Chunk& chunk = chunks[c];
            TokenizedSequence tokens = tokenize(chunk.text, vocab);
            const std::size_t budget = options.max_sequence_length - 2; // [CLS] ... [SEP]
            if (tokens.size() > budget) {
                tokens.ids.resize(budget);
                tokens.surfaces.resize(budget);
                tokens.word_start.resize(budget);
                tokens.offsets.resize(budget);
            }
            if (tokens.ids.empty()) continue;

            std::vector<CharSpan> spans;
            MaskingOptions mopt;
            mopt.budget = options.mask_budget;
            switch (options.scheme) {
                case MaskingScheme::kStandard:
                    mopt.use_span_tier = false;
                    mopt.use_whole_word_tier = false;
                    break;
                case MaskingScheme::kEntity:
                    if (doc.entity_spans) spans = spans_in_chunk(*doc.entity_spans, chunk);
                    break;
                case MaskingScheme::kNounPhrase:
                    if (doc.noun_phrase_spans) {
                        spans = spans_in_chunk(*doc.noun_phrase_spans, chunk);
                    } else {
                        spans = heuristic_noun_phrase_spans(chunk.text, lexicon);
                    }
                    break;
            }

            const std::uint64_t chunk_seed = doc_seed ^ (0x9e3779b97f4a7c15ull * (c + 1));
            MaskingPlan plan = plan_masking(tokens, spans, mopt, chunk_seed);
            MaskedSequence masked = apply_masking(tokens, plan, vocab, chunk_seed ^ 0xa5a5a5a5a5a5a5a5ull);

            PretrainExample example;
            example.token_ids.push_back(Vocabulary::kClsId);
            example.token_ids.insert(example.token_ids.end(), tokens.ids.begin(), tokens.ids.end());
            example.token_ids.push_back(Vocabulary::kSepId);
            example.masked_ids.push_back(Vocabulary::kClsId);
            example.masked_ids.insert(example.masked_ids.end(), masked.ids.begin(), masked.ids.end());
            example.masked_ids.push_back(Vocabulary::kSepId);
            for (std::size_t p : masked.predict_positions) {
                example.predict_positions.push_back(p + 1);
            }
            example.target_ids = masked.target_ids;
            result.examples.push_back(std::move(example));
        }
        result.chunk_count += chunks.size();
    }
    return result;
}

// ---------------------------------------------------------------- pretrain

namespace {

std::vector<std::int64_t> targets_for(const PretrainExample& e) {
    std::vector<std::int64_t> targets(e.token_ids.size(), -1);
    for (std::size_t i = 0; i < e.predict_positions.size(); ++i) {
        if (e.predict_positions[i] >= targets.size()) {
            throw PlanError("pretrain example: predict position out of range");
        }
        targets[e.predict_positions[i]] = static_cast<std::int64_t>(e.target_ids[i]);
    }
    return targets;
}

// seeded epoch-reshuffled order over example indices
class BatchCursor {
public:
    BatchCursor(std::size_t count, std::uint64_t seed) : count_(count), seed_(seed) { reshuffle(); }

    std::size_t next() {
        if (position_ >= order_.size()) {
            ++epoch_;
            reshuffle();
        }
        return order_[position_++];
    }

private:
    void reshuffle() {
        order_.resize(count_);
        for (std::size_t i = 0; i < count_; ++i) order_[i] = i;
        Rng rng(seed_ ^ (0xc2b2ae3d27d4eb4full * (epoch_ + 1)));
        rng.shuffle(order_);
        position_ = 0;
    }

    std::size_t count_;
    std::uint64_t seed_;
    std::size_t epoch_ = 0;
    std::size_t position_ = 0;
    std::vector<std::size_t> order_;
};

} // namespace

PretrainOutcome pretrain(const std::vector<PretrainExample>& examples,
                         const EncoderStackConfig& config,
                         const PretrainOptions& options,
                         const std::string& checkpoint_path,
                         const std::string& vocab_hash_hex,
                         std::ostream* loss_log) {
    if (examples.empty()) {
        throw TrainError("pretrain: no examples");
    }
    config.validate();

    ModelParams params = build_model(config, options.seed);
    OptimizerState state;
    AdamConfig adam;
    adam.beta1 = options.adam_beta1;
    adam.beta2 = options.adam_beta2;
    adam.epsilon = options.adam_epsilon;
    adam.weight_decay = options.weight_decay;

    if (loss_log) {
        (*loss_log) << "step,loss,lr\n";
    }
    if (!checkpoint_path.empty()) {
        save_checkpoint(checkpoint_path, params, config, vocab_hash_hex); // step-0 state
    }

    BatchCursor cursor(examples.size(), options.seed ^ 0x8e9d3a2b71c6f045ull);
    Rng dropout_rng(options.seed ^ 0xd05e11aa22bb33ccull);

    PretrainOutcome outcome;
    for (std::size_t step = 1; step <= options.max_steps; ++step) {
        std::vector<VarPtr> losses;
        losses.reserve(options.batch_size);
        for (std::size_t b = 0; b < options.batch_size; ++b) {
            const PretrainExample& e = examples[cursor.next()];
            ForwardMode mode{true, &dropout_rng};
            MlmResult r = mlm_forward(e.masked_ids, targets_for(e), e.predict_positions, params,
                                      config, mode);
            losses.push_back(r.loss);
        }
        VarPtr loss = ops::mean_of(losses);
        const real loss_value = loss->value.at(0);
        if (!std::isfinite(loss_value)) {
            throw TrainError("pretrain: non-finite loss at step " + std::to_string(step) +
                             "; last checkpoint retained");
        }
        backward(loss);

        adam.learning_rate = linear_lr(step, options.peak_learning_rate, options.warmup_steps,
                                       options.max_steps);
        adam_step(params.registry, state, adam);

        if (loss_log) {
            (*loss_log) << step << ',' << format_real(static_cast<double>(loss_value)) << ','
                        << format_real(static_cast<double>(adam.learning_rate)) << '\n';
        }
        outcome.final_loss = loss_value;
        outcome.steps_run = step;

        if (!checkpoint_path.empty() && options.checkpoint_every > 0 &&
            step % options.checkpoint_every == 0) {
            save_checkpoint(checkpoint_path, params, config, vocab_hash_hex);
        }
    }

    if (!checkpoint_path.empty()) {
        save_checkpoint(checkpoint_path, params, config, vocab_hash_hex);
    }
    return outcome;
}

// ---------------------------------------------------------------- qa features

QaFeaturizeResult featurize_qa(const std::vector<QAExample>& examples,
                               const Vocabulary& vocab,
                               std::size_t max_sequence_length,
                               bool with_answers) {
    QaFeaturizeResult result;
    for (std::size_t idx = 0; idx < examples.size(); ++idx) {
        const QAExample& example = examples[idx];
        const TokenizedSequence question = tokenize(example.question, vocab);
        const TokenizedSequence passage = tokenize(example.passage, vocab);

        // [CLS] q [SEP] p [SEP]
        const std::size_t overhead = 3 + question.size();
        if (overhead + 1 > max_sequence_length || passage.size() == 0) {
            result.skipped_too_long += 1;
            continue;
        }
        const std::size_t passage_budget = max_sequence_length - overhead;
        const std::size_t passage_tokens = std::min(passage.size(), passage_budget);

        QaFeature feature;
        feature.example_id = example.id;
        feature.ids.push_back(Vocabulary::kClsId);
        feature.ids.insert(feature.ids.end(), question.ids.begin(), question.ids.end());
        feature.ids.push_back(Vocabulary::kSepId);
        feature.passage_begin = feature.ids.size();
        feature.ids.insert(feature.ids.end(), passage.ids.begin(), passage.ids.begin() + passage_tokens);
        feature.passage_end = feature.ids.size();
        feature.ids.push_back(Vocabulary::kSepId);
        feature.passage_offsets.assign(passage.offsets.begin(), passage.offsets.begin() + passage_tokens);

        if (with_answers) {
            if (example.answer_texts.empty()) {
                result.skipped_bad_offset += 1;
                continue;
            }
            const std::string& answer = example.answer_texts.front();
            const std::size_t answer_start = example.answer_starts.front();
            if (answer_start + answer.size() > example.passage.size() ||
                example.passage.compare(answer_start, answer.size(), answer) != 0) {
                result.skipped_bad_offset += 1;
                continue;
            }
            const std::size_t answer_end = answer_start + answer.size(); // exclusive

            // first token overlapping the answer start, last token
            // overlapping the answer end
            std::size_t start_token = passage_tokens, end_token = passage_tokens;
            for (std::size_t t = 0; t < passage_tokens; ++t) {
                const CharSpan& o = feature.passage_offsets[t];
                if (start_token == passage_tokens && o.end > answer_start) start_token = t;
                if (o.begin < answer_end) end_token = t;
            }
            if (start_token >= passage_tokens || end_token >= passage_tokens ||
                start_token > end_token ||
                feature.passage_offsets[start_token].begin >= answer_end) {
                result.skipped_span_outside += 1;
                continue;
            }
            feature.start_position = feature.passage_begin + start_token;
            feature.end_position = feature.passage_begin + end_token;
        }

        result.features.push_back(std::move(feature));
        result.example_index.push_back(idx);
    }
    return result;
}

std::string predict_answer(const QaFeature& feature,
                           const std::string& passage,
                           const ModelParams& params,
                           const EncoderStackConfig& config,
                           std::size_t max_answer_length) {
    QaSpanLogits logits = qa_span_forward(feature.ids, feature.passage_begin, feature.passage_end,
                                          params, config);
    const SpanPrediction span = decode_span(logits.start_row->value.values(),
                                            logits.end_row->value.values(), max_answer_length);
    const std::size_t first = span.start - feature.passage_begin;
    const std::size_t last = span.end - feature.passage_begin;
    const std::size_t char_begin = feature.passage_offsets[first].begin;
    const std::size_t char_end = feature.passage_offsets[last].end;
    return passage.substr(char_begin, char_end - char_begin);
}

FinetuneOutcome finetune_qa(const std::vector<QAExample>& train_set,
                            const std::vector<QAExample>& dev_set,
                            ModelParams& params,
                            const EncoderStackConfig& config,
                            const Vocabulary& vocab,
                            const FinetuneOptions& options,
                            std::ostream* loss_log) {
    QaFeaturizeResult train_features = featurize_qa(train_set, vocab, config.max_sequence_length, true);
    if (train_features.features.empty()) {
        throw TrainError("finetune_qa: no usable training features");
    }

    const std::size_t steps_per_epoch =
        (train_features.features.size() + options.batch_size - 1) / options.batch_size;
    const std::size_t max_steps =
        options.max_steps > 0 ? options.max_steps : options.epochs * steps_per_epoch;
    const std::size_t warmup = max_steps / 10;

    OptimizerState state;
    AdamConfig adam;
    adam.beta1 = options.adam_beta1;
    adam.beta2 = options.adam_beta2;
    adam.epsilon = options.adam_epsilon;
    adam.weight_decay = options.weight_decay;

    if (loss_log) {
        (*loss_log) << "step,loss,lr\n";
    }

    BatchCursor cursor(train_features.features.size(), options.seed ^ 0x51f2bc3a9d8e7c61ull);
    Rng dropout_rng(options.seed ^ 0x1122334455667788ull);

    FinetuneOutcome outcome;
    for (std::size_t step = 1; step <= max_steps; ++step) {
        std::vector<VarPtr> losses;
        for (std::size_t b = 0; b < options.batch_size; ++b) {
            const QaFeature& f = train_features.features[cursor.next()];
            ForwardMode mode{true, &dropout_rng};
            QaSpanLogits logits = qa_span_forward(f.ids, f.passage_begin, f.passage_end, params,
                                                  config, mode);
            const std::vector<std::int64_t> start_target = {static_cast<std::int64_t>(f.start_position)};
            const std::vector<std::int64_t> end_target = {static_cast<std::int64_t>(f.end_position)};
            const std::vector<std::size_t> row0 = {0};
            losses.push_back(ops::cross_entropy_masked(logits.start_row, start_target, row0));
            losses.push_back(ops::cross_entropy_masked(logits.end_row, end_target, row0));
        }
        VarPtr loss = ops::mean_of(losses);
        const real loss_value = loss->value.at(0);
        if (!std::isfinite(loss_value)) {
            throw TrainError("finetune_qa: non-finite loss at step " + std::to_string(step));
        }
        backward(loss);
        adam.learning_rate = linear_lr(step, options.learning_rate, warmup, max_steps);
        adam_step(params.registry, state, adam);
        if (loss_log) {
            (*loss_log) << step << ',' << format_real(static_cast<double>(loss_value)) << ','
                        << format_real(static_cast<double>(adam.learning_rate)) << '\n';
        }
        outcome.final_loss = loss_value;
        outcome.steps_run = step;
    }

    // dev-set predictions; unfeaturizable examples predict ""
    QaFeaturizeResult dev_features = featurize_qa(dev_set, vocab, config.max_sequence_length, false);
    std::vector<Prediction> predictions;
    std::vector<GoldAnswers> golds;
    std::vector<bool> covered(dev_set.size(), false);
    for (std::size_t f = 0; f < dev_features.features.size(); ++f) {
        const QaFeature& feature = dev_features.features[f];
        const QAExample& example = dev_set[dev_features.example_index[f]];
        covered[dev_features.example_index[f]] = true;
        predictions.push_back({feature.example_id,
                               predict_answer(feature, example.passage, params, config,
                                              options.max_answer_length)});
    }
    for (std::size_t i = 0; i < dev_set.size(); ++i) {
        golds.push_back({dev_set[i].id, dev_set[i].answer_texts});
        if (!covered[i]) {
            predictions.push_back({dev_set[i].id, ""});
        }
    }

    outcome.report = evaluate_em_f1(predictions, golds);
    outcome.report.seed = options.seed;
    outcome.report.hyperparameters = {
        {"learning_rate", format_real(static_cast<double>(options.learning_rate))},
        {"epochs", std::to_string(options.epochs)},
        {"batch_size", std::to_string(options.batch_size)},
        {"max_steps", std::to_string(max_steps)},
        {"warmup_steps", std::to_string(warmup)},
        {"max_answer_length", std::to_string(options.max_answer_length)},
        {"weight_decay", format_real(static_cast<double>(options.weight_decay))},
    };
    return outcome;
}

} // namespace naenc
