#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "naenc/tokenizer.hpp"

namespace naenc {

struct Document {
    std::string id;
    std::string text;
    std::optional<std::vector<CharSpan>> noun_phrase_spans; // sorted, non-overlapping
    std::optional<std::vector<CharSpan>> entity_spans;      // sorted, non-overlapping

    static Document from_json_line(const std::string& line);
    std::string to_json_line() const;
};

// One named regex rewrite from the versioned rules file.
struct CleanRule {
    std::string name;
    std::string pattern_text;
    std::string replacement;
    std::regex pattern;
};

struct CleanRules {
    std::vector<CleanRule> rules;
    std::size_t min_sentence_words = 10;
    std::size_t min_document_words = 100;
    // Pluggable document-level filter (language detection would hook in
    // here); return false to drop. None is shipped.
    std::function<bool(const Document&)> document_filter;

    // File layout: '#' comments; one rule per line as
    // "<name>\t<regex>\t<replacement>" (empty third field deletes).
    static CleanRules load(const std::string& path);
};

struct CleanCounters {
    std::uint64_t documents_in = 0;
    std::uint64_t documents_out = 0;
    std::uint64_t documents_dropped_short = 0;
    std::uint64_t documents_dropped_filter = 0;
    std::uint64_t sentences_dropped_short = 0;
    std::uint64_t annotations_dropped = 0;
    std::uint64_t malformed_lines = 0;
    std::map<std::string, std::uint64_t> rule_hits;

    std::string to_json() const;
};

std::vector<std::string> split_sentences(const std::string& text);
std::size_t count_words(const std::string& text);

// Regex rewrites, sentence split, short-sentence drop, whitespace
// normalization, short-document drop. Span annotations survive only when
// cleaning leaves the text byte-identical; otherwise they are dropped and
// counted. Returns nullopt when the document is dropped.
std::optional<Document> clean_document(const Document& doc, const CleanRules& rules,
                                       CleanCounters& counters);

std::vector<Document> clean_corpus(const std::vector<Document>& docs, const CleanRules& rules,
                                   CleanCounters& counters);

// Line-delimited JSON, one Document per line. Malformed lines are counted
// and skipped, never fatal.
std::vector<Document> read_corpus_file(const std::string& path, CleanCounters& counters);
void write_corpus_file(const std::string& path, const std::vector<Document>& docs);

// A chunk of a cleaned document: contiguous text plus its character offset
// into the document, so document-level spans translate to chunk-local ones.
struct Chunk {
    std::string text;
    std::size_t doc_offset = 0;
};

struct ChunkOptions {
    std::size_t max_words = 300;
    std::size_t overlap_tokens = 0; // whitespace words copied from the prior chunk
};

// Greedy packing of whole sentences; a sentence longer than max_words
// becomes its own chunk. With overlap, each later chunk starts with the
// trailing overlap_tokens words of the previous chunk (its sentence budget
// shrinks accordingly so emitted chunks stay within max_words).
std::vector<Chunk> chunk_document(const Document& doc, const ChunkOptions& options);

// Spans from the document fully contained in the chunk, rebased to
// chunk-local offsets.
std::vector<CharSpan> spans_in_chunk(const std::vector<CharSpan>& spans, const Chunk& chunk);

enum class PosTag { kDeterminer, kAdjective, kNoun, kOther };

// Small bundled word->tag table; unknown words fall back to NOUN when they
// start uppercase or contain a digit, OTHER otherwise.
class PosLexicon {
public:
    static PosLexicon load(const std::string& path);
    void add(const std::string& word, PosTag tag);
    PosTag tag_word(const std::string& word) const;

private:
    std::map<std::string, PosTag> table_; // lowercased surface -> tag
};

// Deterministic pattern: optional determiner, adjectives, then a noun run;
// trailing sentence punctuation ends a phrase. Spans never overlap.
std::vector<CharSpan> heuristic_noun_phrase_spans(const std::string& text, const PosLexicon& lexicon);

} // namespace naenc
