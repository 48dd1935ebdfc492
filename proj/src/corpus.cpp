#include "naenc/corpus.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "naenc/errors.hpp"

namespace naenc {

namespace {

bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::vector<CharSpan> spans_from_json(const nlohmann::json& j) {
    std::vector<CharSpan> spans;
    for (const auto& item : j) {
        if (!item.is_array() || item.size() != 2) {
            throw FormatError("document: span entries must be [start, end] pairs");
        }
        spans.push_back({item[0].get<std::size_t>(), item[1].get<std::size_t>()});
    }
    return spans;
}

nlohmann::json spans_to_json(const std::vector<CharSpan>& spans) {
    nlohmann::json j = nlohmann::json::array();
    for (const CharSpan& s : spans) {
        j.push_back({s.begin, s.end});
    }
    return j;
}

void validate_spans(const std::vector<CharSpan>& spans, std::size_t text_size, const char* what) {
    std::size_t prev_end = 0;
    for (const CharSpan& s : spans) {
        if (s.begin >= s.end || s.end > text_size) {
            throw FormatError(std::string("document: ") + what + " span out of bounds");
        }
        if (s.begin < prev_end) {
            throw FormatError(std::string("document: ") + what + " spans overlap or are unsorted");
        }
        prev_end = s.end;
    }
}

} // namespace

Document Document::from_json_line(const std::string& line) {
    nlohmann::json j = nlohmann::json::parse(line);
    Document doc;
    doc.id = j.at("id").get<std::string>();
    doc.text = j.at("text").get<std::string>();
    if (j.contains("noun_phrase_spans")) {
        doc.noun_phrase_spans = spans_from_json(j.at("noun_phrase_spans"));
        validate_spans(*doc.noun_phrase_spans, doc.text.size(), "noun phrase");
    }
    if (j.contains("entity_spans")) {
        doc.entity_spans = spans_from_json(j.at("entity_spans"));
        validate_spans(*doc.entity_spans, doc.text.size(), "entity");
    }
    return doc;
}

std::string Document::to_json_line() const {
    nlohmann::json j;
    j["id"] = id;
    j["text"] = text;
    if (noun_phrase_spans) j["noun_phrase_spans"] = spans_to_json(*noun_phrase_spans);
    if (entity_spans) j["entity_spans"] = spans_to_json(*entity_spans);
    return j.dump();
}

CleanRules CleanRules::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("clean rules: cannot open '" + path + "'");
    }
    CleanRules rules;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const std::size_t tab1 = line.find('\t');
        if (tab1 == std::string::npos) {
            throw FormatError("clean rules: line " + std::to_string(line_no) + " lacks a tab separator");
        }
        const std::size_t tab2 = line.find('\t', tab1 + 1);
        CleanRule rule;
        rule.name = line.substr(0, tab1);
        rule.pattern_text = tab2 == std::string::npos ? line.substr(tab1 + 1)
                                                      : line.substr(tab1 + 1, tab2 - tab1 - 1);
        rule.replacement = tab2 == std::string::npos ? std::string() : line.substr(tab2 + 1);
        try {
            rule.pattern = std::regex(rule.pattern_text, std::regex::ECMAScript);
        } catch (const std::regex_error& e) {
            throw FormatError("clean rules: rule '" + rule.name + "' has a bad regex: " + e.what());
        }
        rules.rules.push_back(std::move(rule));
    }
    return rules;
}

std::string CleanCounters::to_json() const {
    nlohmann::json j;
    j["documents_in"] = documents_in;
    j["documents_out"] = documents_out;
    j["documents_dropped_short"] = documents_dropped_short;
    j["documents_dropped_filter"] = documents_dropped_filter;
    j["sentences_dropped_short"] = sentences_dropped_short;
    j["annotations_dropped"] = annotations_dropped;
    j["malformed_lines"] = malformed_lines;
    j["rule_hits"] = rule_hits;
    return j.dump(2);
}

std::vector<std::string> split_sentences(const std::string& text) {
    // A sentence ends at [.!?]+ (plus closing quotes/brackets) followed by
    // whitespace, or at a blank line, or at end of text.
    std::vector<std::string> sentences;
    std::string current;
    auto flush = [&] {
        // collapse internal whitespace runs to single spaces
        std::string normalized;
        bool pending_space = false;
        for (char c : current) {
            if (is_ascii_space(c)) {
                pending_space = !normalized.empty();
            } else {
                if (pending_space) normalized += ' ';
                pending_space = false;
                normalized += c;
            }
        }
        if (!normalized.empty()) sentences.push_back(std::move(normalized));
        current.clear();
    };

    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (c == '\n') {
            // blank line forces a boundary
            std::size_t j = i;
            std::size_t newlines = 0;
            while (j < text.size() && is_ascii_space(text[j])) {
                if (text[j] == '\n') ++newlines;
                ++j;
            }
            if (newlines >= 2) {
                flush();
                i = j;
                continue;
            }
        }
        current += c;
        if (c == '.' || c == '!' || c == '?') {
            std::size_t j = i + 1;
            while (j < text.size() &&
                   (text[j] == '.' || text[j] == '!' || text[j] == '?' || text[j] == '"' ||
                    text[j] == '\'' || text[j] == ')' || text[j] == ']')) {
                current += text[j];
                ++j;
            }
            if (j >= text.size() || is_ascii_space(text[j])) {
                flush();
            }
            i = j;
            continue;
        }
        ++i;
    }
    flush();
    return sentences;
}

std::size_t count_words(const std::string& text) {
    std::size_t words = 0;
    bool in_word = false;
    for (char c : text) {
        const bool space = is_ascii_space(c);
        if (!space && !in_word) ++words;
        in_word = !space;
    }
    return words;
}

std::optional<Document> clean_document(const Document& doc, const CleanRules& rules,
                                       CleanCounters& counters) {
    counters.documents_in += 1;

    if (rules.document_filter && !rules.document_filter(doc)) {
        counters.documents_dropped_filter += 1;
        return std::nullopt;
    }

    std::string text = doc.text;
    for (const CleanRule& rule : rules.rules) {
        auto begin = std::sregex_iterator(text.begin(), text.end(), rule.pattern);
        const std::size_t hits = static_cast<std::size_t>(std::distance(begin, std::sregex_iterator()));
        if (hits > 0) {
            counters.rule_hits[rule.name] += hits;
            text = std::regex_replace(text, rule.pattern, rule.replacement);
        }
    }

    std::string cleaned;
    for (const std::string& sentence : split_sentences(text)) {
        if (count_words(sentence) < rules.min_sentence_words) {
            counters.sentences_dropped_short += 1;
            continue;
        }
        if (!cleaned.empty()) cleaned += ' ';
        cleaned += sentence;
    }

    if (count_words(cleaned) < rules.min_document_words) {
        counters.documents_dropped_short += 1;
        return std::nullopt;
    }

    Document out;
    out.id = doc.id;
    out.text = cleaned;
    if (cleaned == doc.text) {
        out.noun_phrase_spans = doc.noun_phrase_spans;
        out.entity_spans = doc.entity_spans;
    } else if (doc.noun_phrase_spans || doc.entity_spans) {
        // offsets no longer line up with the rewritten text
        counters.annotations_dropped += 1;
    }
    counters.documents_out += 1;
    return out;
}

std::vector<Document> clean_corpus(const std::vector<Document>& docs, const CleanRules& rules,
                                   CleanCounters& counters) {
    std::vector<Document> out;
    for (const Document& doc : docs) {
        if (auto cleaned = clean_document(doc, rules, counters)) {
            out.push_back(std::move(*cleaned));
        }
    }
    return out;
}

std::vector<Document> read_corpus_file(const std::string& path, CleanCounters& counters) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("corpus: cannot open '" + path + "'");
    }
    std::vector<Document> docs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            docs.push_back(Document::from_json_line(line));
        } catch (const std::exception&) {
            counters.malformed_lines += 1;
        }
    }
    return docs;
}

void write_corpus_file(const std::string& path, const std::vector<Document>& docs) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw FormatError("corpus: cannot open '" + path + "' for writing");
    }
    for (const Document& doc : docs) {
        out << doc.to_json_line() << '\n';
    }
}

namespace {

struct WordPos {
    std::size_t begin;
    std::size_t end;
};

std::vector<WordPos> word_positions(const std::string& text) {
    std::vector<WordPos> words;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_ascii_space(text[i])) ++i;
        const std::size_t begin = i;
        while (i < text.size() && !is_ascii_space(text[i])) ++i;
        if (i > begin) words.push_back({begin, i});
    }
    return words;
}

} // namespace

std::vector<Chunk> chunk_document(const Document& doc, const ChunkOptions& options) {
    if (options.max_words == 0) {
        throw ConfigError("chunking: max_words must be positive");
    }
    if (options.overlap_tokens >= options.max_words) {
        throw ConfigError("chunking: overlap must be smaller than max_words");
    }

    const std::vector<std::string> sentences = split_sentences(doc.text);
    if (sentences.empty()) return {};

    const std::vector<WordPos> words = word_positions(doc.text);

    // sentence -> [first word, last word) index range; sentences are
    // contiguous non-overlapping pieces of the document text
    std::vector<std::pair<std::size_t, std::size_t>> sentence_words;
    std::size_t w = 0;
    std::size_t cursor = 0;
    for (const std::string& sentence : sentences) {
        const std::size_t begin_char = doc.text.find(sentence, cursor);
        if (begin_char == std::string::npos) {
            throw Error("chunking: sentence not found in document text"); // unreachable on cleaned docs
        }
        const std::size_t end_char = begin_char + sentence.size();
        const std::size_t first = w;
        while (w < words.size() && words[w].end <= end_char) ++w;
        sentence_words.emplace_back(first, w);
        cursor = end_char;
    }

    // greedy packing of sentences into base chunks
    std::vector<Chunk> chunks;
    std::size_t si = 0;
    std::size_t prev_full_first_word = 0; // word index where the previous emitted chunk began
    bool first_chunk = true;
    while (si < sentence_words.size()) {
        const std::size_t budget =
            first_chunk ? options.max_words
                        : (options.overlap_tokens > 0 ? options.max_words - options.overlap_tokens
                                                      : options.max_words);
        std::size_t base_first = sentence_words[si].first;
        std::size_t base_last = base_first;
        std::size_t packed = 0;
        while (si < sentence_words.size()) {
            const std::size_t sentence_len = sentence_words[si].second - sentence_words[si].first;
            if (packed > 0 && packed + sentence_len > budget) break;
            packed += sentence_len;
            base_last = sentence_words[si].second;
            ++si;
            if (packed >= budget) break;
        }

        std::size_t full_first = base_first;
        if (!first_chunk && options.overlap_tokens > 0) {
            const std::size_t reach = std::min(options.overlap_tokens, base_first - prev_full_first_word);
            full_first = base_first - reach;
        }

        Chunk chunk;
        chunk.doc_offset = words[full_first].begin;
        chunk.text = doc.text.substr(words[full_first].begin, words[base_last - 1].end - words[full_first].begin);
        prev_full_first_word = full_first;
        chunks.push_back(std::move(chunk));
        first_chunk = false;
    }
    return chunks;
}

std::vector<CharSpan> spans_in_chunk(const std::vector<CharSpan>& spans, const Chunk& chunk) {
    std::vector<CharSpan> local;
    const std::size_t begin = chunk.doc_offset;
    const std::size_t end = begin + chunk.text.size();
    for (const CharSpan& s : spans) {
        if (s.begin >= begin && s.end <= end) {
            local.push_back({s.begin - begin, s.end - begin});
        }
    }
    return local;
}

PosLexicon PosLexicon::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("pos lexicon: cannot open '" + path + "'");
    }
    PosLexicon lex;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            throw FormatError("pos lexicon: line " + std::to_string(line_no) + " lacks a tab separator");
        }
        const std::string word = line.substr(0, tab);
        const std::string tag = line.substr(tab + 1);
        if (tag == "DET") lex.add(word, PosTag::kDeterminer);
        else if (tag == "ADJ") lex.add(word, PosTag::kAdjective);
        else if (tag == "NOUN") lex.add(word, PosTag::kNoun);
        else if (tag == "OTHER") lex.add(word, PosTag::kOther);
        else throw FormatError("pos lexicon: unknown tag '" + tag + "' at line " + std::to_string(line_no));
    }
    return lex;
}

void PosLexicon::add(const std::string& word, PosTag tag) {
    std::string key = word;
    for (char& c : key) {
        const unsigned char u = static_cast<unsigned char>(c);
        if (u < 0x80) c = static_cast<char>(std::tolower(u));
    }
    table_[key] = tag;
}

PosTag PosLexicon::tag_word(const std::string& word) const {
    std::string key = word;
    for (char& c : key) {
        const unsigned char u = static_cast<unsigned char>(c);
        if (u < 0x80) c = static_cast<char>(std::tolower(u));
    }
    auto it = table_.find(key);
    if (it != table_.end()) return it->second;
    if (!word.empty()) {
        const unsigned char first = static_cast<unsigned char>(word[0]);
        if (first < 0x80 && std::isupper(first)) return PosTag::kNoun;
        for (char c : word) {
            const unsigned char u = static_cast<unsigned char>(c);
            if (u < 0x80 && std::isdigit(u)) return PosTag::kNoun;
        }
    }
    return PosTag::kOther;
}

namespace {

struct TaggedWord {
    std::size_t core_begin; // word minus surrounding ASCII punctuation
    std::size_t core_end;
    PosTag tag;
    bool sentence_final; // raw form ends with . ! ? , ; or :
};

} // namespace

std::vector<CharSpan> heuristic_noun_phrase_spans(const std::string& text, const PosLexicon& lexicon) {
    std::vector<TaggedWord> tagged;
    for (const WordPos& w : word_positions(text)) {
        std::size_t core_begin = w.begin;
        std::size_t core_end = w.end;
        auto is_edge_punct = [](char c) {
            return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?' ||
                   c == '"' || c == '\'' || c == '(' || c == ')' || c == '[' || c == ']';
        };
        while (core_begin < core_end && is_edge_punct(text[core_begin])) ++core_begin;
        while (core_end > core_begin && is_edge_punct(text[core_end - 1])) --core_end;

        TaggedWord tw;
        tw.core_begin = core_begin;
        tw.core_end = core_end;
        const char last_raw = text[w.end - 1];
        tw.sentence_final = last_raw == '.' || last_raw == '!' || last_raw == '?' || last_raw == ',' ||
                            last_raw == ';' || last_raw == ':';
        tw.tag = core_begin < core_end
                     ? lexicon.tag_word(text.substr(core_begin, core_end - core_begin))
                     : PosTag::kOther;
        tagged.push_back(tw);
    }

    // (DET)? (ADJ)* (NOUN)+ with the run cut after any sentence-final word
    std::vector<CharSpan> spans;
    std::size_t i = 0;
    while (i < tagged.size()) {
        std::size_t j = i;
        if (j < tagged.size() && tagged[j].tag == PosTag::kDeterminer && !tagged[j].sentence_final) {
            ++j;
        }
        while (j < tagged.size() && tagged[j].tag == PosTag::kAdjective && !tagged[j].sentence_final) {
            ++j;
        }
        std::size_t nouns = 0;
        while (j < tagged.size() && tagged[j].tag == PosTag::kNoun) {
            ++nouns;
            const bool stop = tagged[j].sentence_final;
            ++j;
            if (stop) break;
        }
        if (nouns > 0) {
            spans.push_back({tagged[i].core_begin, tagged[j - 1].core_end});
            i = j;
        } else {
            ++i;
        }
    }
    return spans;
}

} // namespace naenc
