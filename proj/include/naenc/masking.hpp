#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "naenc/tokenizer.hpp"

namespace naenc {

enum class MaskTier { kNpSpan, kWholeWord, kToken };
enum class MaskAction { kMask, kKeep, kRandom };

const char* mask_tier_name(MaskTier tier);
const char* mask_action_name(MaskAction action);

struct MaskedPosition {
    std::size_t position = 0;
    MaskTier tier = MaskTier::kToken;
    MaskAction action = MaskAction::kMask;
    TokenId original_id = 0;
    std::size_t unit = 0; // ordinal of the selected unit; one action draw per unit
};

struct MaskingPlan {
    std::vector<MaskedPosition> selected; // sorted by position
    std::size_t unit_count = 0;

    std::vector<std::size_t> predict_positions() const;
    bool empty() const { return selected.empty(); }
};

struct MaskingOptions {
    double budget = 0.15;
    double mask_ratio = 0.8;
    double keep_ratio = 0.1;
    double random_ratio = 0.1;
    bool use_span_tier = true;
    bool use_whole_word_tier = true;

    void validate() const;
};

// Budgeted three-tier selection. The budget floor is floor(budget * L);
// selection prefers whole noun-phrase spans (shuffled), which are taken
// atomically and may overshoot the floor by at most one span's length minus
// one; multi-token whole words then fill only if they fit; single tokens
// top up to the floor exactly. One MASK/KEEP/RANDOM action is drawn per
// selected unit with the configured probabilities.
// Sequences whose floor is zero get an empty plan.
MaskingPlan plan_masking(const TokenizedSequence& tokens,
                         const std::vector<CharSpan>& np_spans,
                         const MaskingOptions& options,
                         std::uint64_t seed);

struct MaskedSequence {
    std::vector<TokenId> ids;                    // input with masking applied
    std::vector<std::size_t> predict_positions;  // sorted
    std::vector<TokenId> target_ids;             // aligned with predict_positions
};

// MASK positions become [MASK]; KEEP stays; RANDOM draws a uniform
// non-special id from `vocab`, seeded. Targets are the original ids at all
// selected positions.
MaskedSequence apply_masking(const TokenizedSequence& tokens,
                             const MaskingPlan& plan,
                             const Vocabulary& vocab,
                             std::uint64_t seed);

} // namespace naenc
