#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "naenc/checkpoint.hpp"
#include "naenc/corpus.hpp"
#include "naenc/encoder.hpp"
#include "naenc/masking.hpp"
#include "naenc/metrics.hpp"
#include "naenc/optimizer.hpp"
#include "naenc/squad.hpp"

namespace naenc {

// Piecewise-linear schedule: ramp to `peak` at warmup_steps, then decay to
// zero at max_steps. Steps are 1-based.
real linear_lr(std::size_t step, real peak, std::size_t warmup_steps, std::size_t max_steps);

// Stable float formatting for CSV/JSON artifacts (shortest round-trip).
std::string format_real(double value);

// ---- pre-training example format (line-delimited JSON) ----

struct PretrainExample {
    std::vector<TokenId> token_ids;  // original sequence, specials included
    std::vector<TokenId> masked_ids; // same sequence with masking applied
    std::vector<std::size_t> predict_positions;
    std::vector<TokenId> target_ids; // aligned with predict_positions

    std::string to_json_line() const;
    static PretrainExample from_json_line(const std::string& line);
};

std::vector<PretrainExample> read_pretrain_examples(const std::string& path);
void write_pretrain_examples(const std::string& path, const std::vector<PretrainExample>& examples);

// ---- preprocessing: corpus -> masked pre-training examples ----

enum class MaskingScheme { kStandard, kEntity, kNounPhrase };
enum class ChunkingMode { kNone, kSentence, kSentenceOverlap128 };

MaskingScheme parse_masking_scheme(const std::string& text);
ChunkingMode parse_chunking_mode(const std::string& text);

struct PreprocessOptions {
    MaskingScheme scheme = MaskingScheme::kNounPhrase;
    ChunkingMode chunking = ChunkingMode::kSentence;
    std::size_t chunk_max_words = 300;
    double mask_budget = 0.15;
    std::size_t max_sequence_length = 128;
    bool skip_cleaning = false;
    std::uint64_t seed = 1;
};

struct PreprocessResult {
    std::vector<PretrainExample> examples;
    CleanCounters counters;
    std::size_t chunk_count = 0;
};

// Per-document results depend only on the document and a seed derived from
// its id, so corpus order does not change any example.
PreprocessResult preprocess_corpus(const std::vector<Document>& docs,
                                   const Vocabulary& vocab,
                                   const CleanRules& rules,
                                   const PosLexicon& lexicon,
                                   const PreprocessOptions& options);

// ---- pre-training ----

struct PretrainOptions {
    std::size_t max_steps = 300;
    std::size_t warmup_steps = 30;
    std::size_t batch_size = 8;
    std::size_t checkpoint_every = 100;
    real peak_learning_rate = 1e-3;
    real adam_beta1 = 0.9;
    real adam_beta2 = 0.999;
    real adam_epsilon = 1e-6;
    real weight_decay = 0.01;
    std::uint64_t seed = 1;
};

struct PretrainOutcome {
    real final_loss = 0;
    std::size_t steps_run = 0;
};

// Writes "step,loss,lr" CSV rows to `loss_log` (when given) and checkpoints
// to `checkpoint_path` (when non-empty). A non-finite loss aborts with
// TrainError before the bad state overwrites the last checkpoint.
PretrainOutcome pretrain(const std::vector<PretrainExample>& examples,
                         const EncoderStackConfig& config,
                         const PretrainOptions& options,
                         const std::string& checkpoint_path,
                         const std::string& vocab_hash_hex,
                         std::ostream* loss_log);

// ---- QA fine-tuning ----

struct QaFeature {
    std::string example_id;
    std::vector<TokenId> ids; // [CLS] question [SEP] passage [SEP]
    std::size_t passage_begin = 0; // token positions
    std::size_t passage_end = 0;
    std::size_t start_position = 0; // gold span, training features only
    std::size_t end_position = 0;
    std::vector<CharSpan> passage_offsets; // per passage token, into the passage text
};

struct QaFeaturizeResult {
    std::vector<QaFeature> features;
    std::vector<std::size_t> example_index; // feature -> index into the input examples
    std::uint64_t skipped_bad_offset = 0;   // answer text absent at the stated offset
    std::uint64_t skipped_span_outside = 0; // gold span outside the tokenized passage
    std::uint64_t skipped_too_long = 0;
};

QaFeaturizeResult featurize_qa(const std::vector<QAExample>& examples,
                               const Vocabulary& vocab,
                               std::size_t max_sequence_length,
                               bool with_answers);

struct FinetuneOptions {
    std::size_t max_steps = 0; // 0 = derive from epochs
    std::size_t epochs = 3;
    std::size_t batch_size = 8;
    real learning_rate = 3e-5;
    real adam_beta1 = 0.9;
    real adam_beta2 = 0.999;
    real adam_epsilon = 1e-6;
    real weight_decay = 0.01;
    std::size_t max_answer_length = 30;
    std::uint64_t seed = 1;
};

struct FinetuneOutcome {
    EvalReport report;
    real final_loss = 0;
    std::size_t steps_run = 0;
};

// Trains the span head and the full stack on the training set, then decodes
// and scores the dev set. Unfeaturizable dev examples predict the empty
// string so the id sets still line up.
FinetuneOutcome finetune_qa(const std::vector<QAExample>& train_set,
                            const std::vector<QAExample>& dev_set,
                            ModelParams& params,
                            const EncoderStackConfig& config,
                            const Vocabulary& vocab,
                            const FinetuneOptions& options,
                            std::ostream* loss_log);

// Decode one feature with the current parameters (eval mode).
std::string predict_answer(const QaFeature& feature,
                           const std::string& passage,
                           const ModelParams& params,
                           const EncoderStackConfig& config,
                           std::size_t max_answer_length);

} // namespace naenc
