#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace naenc {

using TokenId = std::size_t;

enum class EntryKind {
    kSpecial,
    kWhole,        // kept intact by the whole-form tokenizer, may contain punctuation
    kSubwordStart, // wordpiece usable at word start
    kSubwordCont,  // wordpiece continuation; surface carries the "##" marker
};

const char* entry_kind_name(EntryKind kind);

// Ordered token table. The five special tokens sit at fixed reserved
// indices, [PAD] first.
class Vocabulary {
public:
    static constexpr TokenId kPadId = 0;
    static constexpr TokenId kUnkId = 1;
    static constexpr TokenId kClsId = 2;
    static constexpr TokenId kSepId = 3;
    static constexpr TokenId kMaskId = 4;
    static constexpr std::size_t kNumSpecials = 5;
    static constexpr const char* kContinuationMarker = "##";

    // A table holding just the five specials.
    static Vocabulary with_specials();

    struct Entry {
        std::string surface;
        EntryKind kind;
    };

    TokenId add(std::string surface, EntryKind kind); // throws on duplicate surface

    std::size_t size() const { return entries_.size(); }
    const Entry& entry(TokenId id) const;
    const std::string& surface(TokenId id) const { return entry(id).surface; }
    EntryKind kind(TokenId id) const { return entry(id).kind; }
    bool is_special(TokenId id) const { return kind(id) == EntryKind::kSpecial; }
    std::size_t whole_count() const { return whole_count_; }

    bool contains(const std::string& surface) const { return index_.count(surface) != 0; }
    std::optional<TokenId> find(const std::string& surface) const;

    // Whole-form word match, case-sensitive.
    std::optional<TokenId> find_whole(const std::string& word) const;
    // Start-of-word piece: a WHOLE or SUBWORD_START entry.
    std::optional<TokenId> find_word_start(const std::string& piece) const;
    // Continuation piece, looked up without the marker.
    std::optional<TokenId> find_continuation(const std::string& piece) const;

    std::size_t max_start_piece_bytes() const { return max_start_piece_bytes_; }
    std::size_t max_continuation_bytes() const { return max_continuation_bytes_; }

    // File layout: one header line "naenc-vocab <version> <entries> <whole>
    // <subword>", then one "<kind>\t<surface>" line per entry, specials
    // first. UTF-8 throughout.
    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);

    std::string canonical_text() const;
    std::uint64_t hash() const;
    std::string hash_hex() const;

private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, TokenId> index_; // surface (with marker) -> id
    std::size_t whole_count_ = 0;
    std::size_t max_start_piece_bytes_ = 0;
    std::size_t max_continuation_bytes_ = 0;
};

} // namespace naenc
