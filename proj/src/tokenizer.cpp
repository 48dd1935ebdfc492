#include "naenc/tokenizer.hpp"

#include <cctype>

#include "naenc/errors.hpp"

namespace naenc {

namespace {

bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ascii_punct(char c) {
    const unsigned char u = static_cast<unsigned char>(c);
    return u < 0x80 && std::ispunct(u) != 0;
}

std::string ascii_lower(std::string s) {
    for (char& c : s) {
        const unsigned char u = static_cast<unsigned char>(c);
        if (u < 0x80) c = static_cast<char>(std::tolower(u));
    }
    return s;
}

struct WordRange {
    std::size_t begin;
    std::size_t end;
};

std::vector<WordRange> split_whitespace(const std::string& text) {
    std::vector<WordRange> words;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_ascii_space(text[i])) ++i;
        if (i >= text.size()) break;
        const std::size_t begin = i;
        while (i < text.size() && !is_ascii_space(text[i])) ++i;
        words.push_back({begin, i});
    }
    return words;
}

void push_token(TokenizedSequence& seq, TokenId id, const std::string& text, CharSpan span,
                bool word_start) {
    seq.ids.push_back(id);
    seq.surfaces.push_back(text.substr(span.begin, span.end - span.begin));
    seq.word_start.push_back(word_start);
    seq.offsets.push_back(span);
}

// Greedy longest-match wordpiece over text[begin, end). Emits one [UNK]
// covering the range when no chain of pieces fits. `word_start` marks the
// first emitted token only when the range opens a whitespace word.
void greedy_wordpiece(TokenizedSequence& seq, const std::string& text, std::size_t begin,
                      std::size_t end, const Vocabulary& vocab, bool lowercase, bool word_start) {
    if (begin >= end) return;
    const std::string fragment_src = text.substr(begin, end - begin);
    const std::string fragment = lowercase ? ascii_lower(fragment_src) : fragment_src;

    std::vector<std::pair<TokenId, CharSpan>> pieces;
    std::size_t pos = 0;
    while (pos < fragment.size()) {
        const bool at_start = pos == 0;
        const std::size_t cap = at_start ? vocab.max_start_piece_bytes() : vocab.max_continuation_bytes();
        std::size_t take = std::min(fragment.size() - pos, cap);
        bool found = false;
        for (; take > 0; --take) {
            const std::string candidate = fragment.substr(pos, take);
            const auto id = at_start ? vocab.find_word_start(candidate) : vocab.find_continuation(candidate);
            if (id) {
                pieces.emplace_back(*id, CharSpan{begin + pos, begin + pos + take});
                found = true;
                break;
            }
        }
        if (!found) {
            push_token(seq, Vocabulary::kUnkId, text, {begin, end}, word_start);
            return;
        }
        pos += take;
    }
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        push_token(seq, pieces[i].first, text, pieces[i].second, word_start && i == 0);
    }
}

} // namespace

std::vector<std::string> TokenizedSequence::piece_names(const Vocabulary& vocab) const {
    std::vector<std::string> names;
    names.reserve(ids.size());
    for (TokenId id : ids) {
        names.push_back(vocab.surface(id));
    }
    return names;
}

TokenizedSequence tokenize(const std::string& text, const Vocabulary& vocab,
                           const TokenizerOptions& options) {
    TokenizedSequence seq;
    for (const WordRange& word : split_whitespace(text)) {
        const std::string word_text = text.substr(word.begin, word.end - word.begin);
        if (auto whole = vocab.find_whole(word_text)) {
            push_token(seq, *whole, text, {word.begin, word.end}, true);
            continue;
        }
        greedy_wordpiece(seq, text, word.begin, word.end, vocab, options.lowercase, true);
    }
    return seq;
}

TokenizedSequence wordpiece_tokenize(const std::string& text, const Vocabulary& vocab,
                                     const TokenizerOptions& options) {
    TokenizedSequence seq;
    for (const WordRange& word : split_whitespace(text)) {
        // basic tokenization: ASCII punctuation becomes its own fragment
        std::size_t frag_begin = word.begin;
        bool first_fragment = true;
        auto flush = [&](std::size_t frag_end) {
            if (frag_end > frag_begin) {
                greedy_wordpiece(seq, text, frag_begin, frag_end, vocab, options.lowercase,
                                 first_fragment);
                first_fragment = false;
            }
            frag_begin = frag_end;
        };
        for (std::size_t i = word.begin; i < word.end; ++i) {
            if (is_ascii_punct(text[i])) {
                flush(i);
                greedy_wordpiece(seq, text, i, i + 1, vocab, options.lowercase, first_fragment);
                first_fragment = false;
                frag_begin = i + 1;
            }
        }
        flush(word.end);
    }
    return seq;
}

std::string detokenize(const TokenizedSequence& seq, const Vocabulary& vocab) {
    std::string out;
    for (TokenId id : seq.ids) {
        const Vocabulary::Entry& e = vocab.entry(id);
        if (e.kind == EntryKind::kSubwordCont) {
            out += e.surface.substr(2);
            continue;
        }
        if (!out.empty()) out += ' ';
        out += e.surface;
    }
    return out;
}

} // namespace naenc
