#include "naenc/vocab_builder.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "naenc/errors.hpp"

namespace naenc {

namespace {

bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string ascii_lower(std::string s) {
    for (char& c : s) {
        const unsigned char u = static_cast<unsigned char>(c);
        if (u < 0x80) c = static_cast<char>(std::tolower(u));
    }
    return s;
}

std::size_t utf8_len(unsigned char lead) {
    if (lead < 0x80) return 1;
    if ((lead >> 5) == 0x6) return 2;
    if ((lead >> 4) == 0xe) return 3;
    if ((lead >> 3) == 0x1e) return 4;
    return 1; // stray byte, take as-is
}

std::vector<std::string> codepoints(const std::string& word) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < word.size()) {
        const std::size_t n = std::min(utf8_len(static_cast<unsigned char>(word[i])), word.size() - i);
        out.push_back(word.substr(i, n));
        i += n;
    }
    return out;
}

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> words;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_ascii_space(text[i])) ++i;
        const std::size_t begin = i;
        while (i < text.size() && !is_ascii_space(text[i])) ++i;
        if (i > begin) words.push_back(text.substr(begin, i - begin));
    }
    return words;
}

std::string strip_marker(const std::string& symbol) {
    return symbol.rfind("##", 0) == 0 ? symbol.substr(2) : symbol;
}

} // namespace

Vocabulary build_vocabulary(const std::vector<std::string>& texts,
                            const NounPhraseSource& noun_phrases,
                            const VocabBuildOptions& options) {
    if (options.whole_form_fraction < 0.0 || options.whole_form_fraction > 1.0) {
        throw ConfigError("build_vocabulary: whole_form_fraction must lie in [0, 1]");
    }

    // word frequencies for subword learning; noun-phrase word frequencies
    // for the WHOLE slots (original case)
    std::map<std::string, std::uint64_t> word_freq;
    std::map<std::string, std::uint64_t> np_word_freq;
    for (const std::string& text : texts) {
        for (std::string& word : split_words(text)) {
            word_freq[options.lowercase_subwords ? ascii_lower(word) : word] += 1;
        }
        if (noun_phrases) {
            for (const CharSpan& span : noun_phrases(text)) {
                if (span.end > text.size() || span.begin >= span.end) continue;
                for (const std::string& word : split_words(text.substr(span.begin, span.length()))) {
                    np_word_freq[word] += 1;
                }
            }
        }
    }

    // base character alphabet, start and continuation forms
    std::map<std::string, bool> alphabet; // surface -> is_continuation
    for (const auto& [word, freq] : word_freq) {
        const std::vector<std::string> cps = codepoints(word);
        for (std::size_t i = 0; i < cps.size(); ++i) {
            if (i == 0) alphabet.emplace(cps[i], false);
            else alphabet.emplace("##" + cps[i], true);
        }
    }

    if (options.target_size <= Vocabulary::kNumSpecials + alphabet.size()) {
        throw ConfigError("build_vocabulary: target size " + std::to_string(options.target_size) +
                          " cannot cover " + std::to_string(Vocabulary::kNumSpecials) + " specials plus a " +
                          std::to_string(alphabet.size()) + "-character base alphabet");
    }

    const std::size_t open_slots = options.target_size - Vocabulary::kNumSpecials;
    std::size_t whole_quota = static_cast<std::size_t>(
        options.whole_form_fraction * static_cast<double>(open_slots) + 0.5);
    whole_quota = std::min(whole_quota, open_slots - alphabet.size());

    Vocabulary vocab = Vocabulary::with_specials();

    // WHOLE slots: frequency descending, then lexicographic
    std::vector<std::pair<std::string, std::uint64_t>> ranked(np_word_freq.begin(), np_word_freq.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    for (const auto& [word, freq] : ranked) {
        if (vocab.whole_count() >= whole_quota) break;
        if (!vocab.contains(word)) {
            vocab.add(word, EntryKind::kWhole);
        }
    }

    for (const auto& [surface, cont] : alphabet) {
        if (!vocab.contains(surface)) {
            vocab.add(surface, cont ? EntryKind::kSubwordCont : EntryKind::kSubwordStart);
        }
    }

    // BPE-style merges over the word corpus until the budget is spent
    std::vector<std::pair<std::vector<std::string>, std::uint64_t>> segments;
    segments.reserve(word_freq.size());
    for (const auto& [word, freq] : word_freq) {
        std::vector<std::string> symbols = codepoints(word);
        for (std::size_t i = 1; i < symbols.size(); ++i) symbols[i] = "##" + symbols[i];
        segments.emplace_back(std::move(symbols), freq);
    }

    while (vocab.size() < options.target_size) {
        std::map<std::pair<std::string, std::string>, std::uint64_t> pair_freq;
        for (const auto& [symbols, freq] : segments) {
            for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
                pair_freq[{symbols[i], symbols[i + 1]}] += freq;
            }
        }
        if (pair_freq.empty()) break;

        std::pair<std::string, std::string> best;
        std::uint64_t best_freq = 0;
        for (const auto& [pair, freq] : pair_freq) {
            if (freq > best_freq) { // map order makes the tie-break lexicographic
                best = pair;
                best_freq = freq;
            }
        }
        if (best_freq < options.min_pair_frequency) break;

        const std::string merged = best.first + strip_marker(best.second);
        for (auto& [symbols, freq] : segments) {
            for (std::size_t i = 0; i + 1 < symbols.size();) {
                if (symbols[i] == best.first && symbols[i + 1] == best.second) {
                    symbols[i] = merged;
                    symbols.erase(symbols.begin() + static_cast<std::ptrdiff_t>(i) + 1);
                } else {
                    ++i;
                }
            }
        }
        if (!vocab.contains(merged)) {
            vocab.add(merged, merged.rfind("##", 0) == 0 ? EntryKind::kSubwordCont
                                                         : EntryKind::kSubwordStart);
        }
    }

    return vocab;
}

} // namespace naenc
