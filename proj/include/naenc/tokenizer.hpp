#pragma once

#include <string>
#include <vector>

#include "naenc/vocabulary.hpp"

namespace naenc {

// Character-offset interval, end-exclusive.
struct CharSpan {
    std::size_t begin = 0;
    std::size_t end = 0;

    bool operator==(const CharSpan&) const = default;
    std::size_t length() const { return end - begin; }
};

struct TokenizerOptions {
    // Lowercase words before wordpiece matching (ASCII only). Whole-form
    // matching stays case-sensitive regardless.
    bool lowercase = false;
};

struct TokenizedSequence {
    std::vector<TokenId> ids;
    std::vector<std::string> surfaces; // source text slice per token
    std::vector<bool> word_start;      // token begins a whitespace-delimited word
    std::vector<CharSpan> offsets;     // into the source text

    std::size_t size() const { return ids.size(); }

    // Conventional rendering per token: the vocabulary surface (with the
    // "##" marker) for known pieces, "[UNK]" otherwise.
    std::vector<std::string> piece_names(const Vocabulary& vocab) const;
};

// Whole-form tokenizer: split on whitespace; a word equal to a WHOLE entry
// (case-sensitive) stays one token; otherwise greedy wordpiece over the
// whole word, special characters included; an unmatched word becomes [UNK].
TokenizedSequence tokenize(const std::string& text, const Vocabulary& vocab,
                           const TokenizerOptions& options = {});

// Baseline tokenizer: whitespace split, then ASCII punctuation split into
// single tokens, then greedy wordpiece per fragment.
TokenizedSequence wordpiece_tokenize(const std::string& text, const Vocabulary& vocab,
                                     const TokenizerOptions& options = {});

// Inverse up to whitespace normalization: continuation pieces joined
// without a space, everything else space-separated. Works from vocabulary
// surfaces, so baseline punctuation splits stay split.
std::string detokenize(const TokenizedSequence& seq, const Vocabulary& vocab);

} // namespace naenc
