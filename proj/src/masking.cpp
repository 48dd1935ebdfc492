#include "naenc/masking.hpp"

#include <algorithm>

#include "naenc/errors.hpp"
#include "naenc/rng.hpp"

namespace naenc {

const char* mask_tier_name(MaskTier tier) {
    switch (tier) {
        case MaskTier::kNpSpan: return "NP_SPAN";
        case MaskTier::kWholeWord: return "WHOLE_WORD";
        case MaskTier::kToken: return "TOKEN";
    }
    return "?";
}

const char* mask_action_name(MaskAction action) {
    switch (action) {
        case MaskAction::kMask: return "MASK";
        case MaskAction::kKeep: return "KEEP";
        case MaskAction::kRandom: return "RANDOM";
    }
    return "?";
}

std::vector<std::size_t> MaskingPlan::predict_positions() const {
    std::vector<std::size_t> positions;
    positions.reserve(selected.size());
    for (const MaskedPosition& p : selected) positions.push_back(p.position);
    return positions;
}

void MaskingOptions::validate() const {
    if (budget <= 0.0 || budget >= 1.0) {
        throw ConfigError("masking: budget must lie in (0, 1)");
    }
    const double total = mask_ratio + keep_ratio + random_ratio;
    if (mask_ratio < 0 || keep_ratio < 0 || random_ratio < 0 || std::abs(total - 1.0) > 1e-9) {
        throw ConfigError("masking: action ratios must be non-negative and sum to 1");
    }
}

namespace {

struct Unit {
    MaskTier tier;
    std::size_t first; // token position range [first, last]
    std::size_t last;

    std::size_t length() const { return last - first + 1; }
};

// token positions fully covered by the char span, as maximal runs
std::vector<Unit> span_units(const TokenizedSequence& tokens, const std::vector<CharSpan>& spans) {
    std::vector<Unit> units;
    for (const CharSpan& span : spans) {
        std::size_t run_first = 0;
        bool in_run = false;
        for (std::size_t p = 0; p < tokens.size(); ++p) {
            const bool inside = tokens.offsets[p].begin >= span.begin && tokens.offsets[p].end <= span.end;
            if (inside && !in_run) {
                run_first = p;
                in_run = true;
            }
            if (!inside && in_run) {
                units.push_back({MaskTier::kNpSpan, run_first, p - 1});
                in_run = false;
            }
        }
        if (in_run) {
            units.push_back({MaskTier::kNpSpan, run_first, tokens.size() - 1});
        }
    }
    return units;
}

// whitespace words spanning two or more tokens
std::vector<Unit> multi_token_word_units(const TokenizedSequence& tokens) {
    std::vector<Unit> units;
    std::size_t word_first = 0;
    for (std::size_t p = 0; p < tokens.size(); ++p) {
        if (tokens.word_start[p]) {
            if (p - word_first >= 2) {
                units.push_back({MaskTier::kWholeWord, word_first, p - 1});
            }
            word_first = p;
        }
    }
    if (!tokens.ids.empty() && tokens.size() - word_first >= 2) {
        units.push_back({MaskTier::kWholeWord, word_first, tokens.size() - 1});
    }
    return units;
}

} // namespace

MaskingPlan plan_masking(const TokenizedSequence& tokens,
                         const std::vector<CharSpan>& np_spans,
                         const MaskingOptions& options,
                         std::uint64_t seed) {
    options.validate();
    MaskingPlan plan;
    const std::size_t length = tokens.size();
    const std::size_t floor_target = static_cast<std::size_t>(options.budget * static_cast<double>(length));
    if (floor_target == 0) {
        return plan;
    }

    Rng rng(seed);
    std::vector<bool> taken(length, false);
    std::size_t selected_count = 0;

    auto draw_action = [&]() {
        const double u = rng.uniform_real();
        if (u < options.mask_ratio) return MaskAction::kMask;
        if (u < options.mask_ratio + options.keep_ratio) return MaskAction::kKeep;
        return MaskAction::kRandom;
    };

    auto select_unit = [&](const Unit& unit) {
        const MaskAction action = draw_action();
        for (std::size_t p = unit.first; p <= unit.last; ++p) {
            plan.selected.push_back({p, unit.tier, action, tokens.ids[p], plan.unit_count});
            taken[p] = true;
        }
        plan.unit_count += 1;
        selected_count += unit.length();
    };

    auto disjoint = [&](const Unit& unit) {
        for (std::size_t p = unit.first; p <= unit.last; ++p) {
            if (taken[p]) return false;
        }
        return true;
    };

    // spans first: taken whole while the floor is not reached, so the last
    // span may overshoot by (length - 1)
    if (options.use_span_tier && !np_spans.empty()) {
        std::vector<Unit> spans = span_units(tokens, np_spans);
        rng.shuffle(spans);
        for (const Unit& unit : spans) {
            if (selected_count >= floor_target) break;
            if (disjoint(unit)) select_unit(unit);
        }
    }

    // multi-token whole words fill only if they fit under the floor
    if (options.use_whole_word_tier && selected_count < floor_target) {
        std::vector<Unit> words = multi_token_word_units(tokens);
        rng.shuffle(words);
        for (const Unit& unit : words) {
            if (selected_count >= floor_target) break;
            if (selected_count + unit.length() > floor_target) continue;
            if (disjoint(unit)) select_unit(unit);
        }
    }

    // single tokens top up to the floor exactly; positions inside unselected
    // multi-token words are used only as a last resort
    if (selected_count < floor_target) {
        std::vector<bool> in_multi(length, false);
        for (const Unit& unit : multi_token_word_units(tokens)) {
            for (std::size_t p = unit.first; p <= unit.last; ++p) in_multi[p] = true;
        }
        std::vector<std::size_t> singles;
        std::vector<std::size_t> fallback;
        for (std::size_t p = 0; p < length; ++p) {
            if (taken[p]) continue;
            (in_multi[p] ? fallback : singles).push_back(p);
        }
        rng.shuffle(singles);
        rng.shuffle(fallback);
        singles.insert(singles.end(), fallback.begin(), fallback.end());
        for (std::size_t p : singles) {
            if (selected_count >= floor_target) break;
            select_unit({MaskTier::kToken, p, p});
        }
    }

    std::sort(plan.selected.begin(), plan.selected.end(),
              [](const MaskedPosition& a, const MaskedPosition& b) { return a.position < b.position; });
    return plan;
}

MaskedSequence apply_masking(const TokenizedSequence& tokens,
                             const MaskingPlan& plan,
                             const Vocabulary& vocab,
                             std::uint64_t seed) {
    MaskedSequence out;
    out.ids = tokens.ids;

    const std::size_t non_special = vocab.size() - Vocabulary::kNumSpecials;
    if (non_special == 0) {
        throw PlanError("apply_masking: vocabulary has no non-special entries");
    }

    Rng rng(seed);
    for (const MaskedPosition& p : plan.selected) {
        if (p.position >= tokens.size()) {
            throw PlanError("apply_masking: plan position " + std::to_string(p.position) +
                            " outside sequence of length " + std::to_string(tokens.size()));
        }
        if (tokens.ids[p.position] != p.original_id) {
            throw PlanError("apply_masking: plan does not match the sequence at position " +
                            std::to_string(p.position));
        }
        switch (p.action) {
            case MaskAction::kMask:
                out.ids[p.position] = Vocabulary::kMaskId;
                break;
            case MaskAction::kKeep:
                break;
            case MaskAction::kRandom:
                out.ids[p.position] = Vocabulary::kNumSpecials + rng.uniform_index(non_special);
                break;
        }
        out.predict_positions.push_back(p.position);
        out.target_ids.push_back(p.original_id);
    }
    return out;
}

} // namespace naenc
