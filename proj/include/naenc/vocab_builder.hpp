#pragma once

#include <functional>
#include <string>
#include <vector>

#include "naenc/tokenizer.hpp"
#include "naenc/vocabulary.hpp"

namespace naenc {

struct VocabBuildOptions {
    std::size_t target_size = 1024;
    // Hard quota: round(whole_form_fraction * (target_size - specials))
    // WHOLE slots, filled by frequency then lexicographic order. The quota
    // shrinks if the character alphabet would not fit otherwise.
    double whole_form_fraction = 0.7;
    bool lowercase_subwords = false;
    std::size_t min_pair_frequency = 2; // stop merging below this count
};

// Selects noun-phrase character spans for a text; wired to corpus
// annotations or to the bundled heuristic chunker by the caller.
using NounPhraseSource = std::function<std::vector<CharSpan>(const std::string&)>;

// WHOLE slots take the most frequent whitespace-free words found inside
// noun-phrase spans, in their original case; the remaining budget is filled
// with wordpiece merges learned on the corpus (character alphabet first,
// then highest-frequency adjacent-pair merges).
Vocabulary build_vocabulary(const std::vector<std::string>& texts,
                            const NounPhraseSource& noun_phrases,
                            const VocabBuildOptions& options);

} // namespace naenc
