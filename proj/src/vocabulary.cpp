#include "naenc/vocabulary.hpp"

#include <fstream>
#include <sstream>

#include "naenc/errors.hpp"
#include "naenc/rng.hpp"

namespace naenc {

const char* entry_kind_name(EntryKind kind) {
    switch (kind) {
        case EntryKind::kSpecial: return "SPECIAL";
        case EntryKind::kWhole: return "WHOLE";
        case EntryKind::kSubwordStart: return "START";
        case EntryKind::kSubwordCont: return "CONT";
    }
    return "?";
}

namespace {

EntryKind parse_kind(const std::string& name) {
    if (name == "SPECIAL") return EntryKind::kSpecial;
    if (name == "WHOLE") return EntryKind::kWhole;
    if (name == "START") return EntryKind::kSubwordStart;
    if (name == "CONT") return EntryKind::kSubwordCont;
    throw FormatError("vocabulary: unknown entry kind '" + name + "'");
}

} // namespace

Vocabulary Vocabulary::with_specials() {
    Vocabulary v;
    v.add("[PAD]", EntryKind::kSpecial);
    v.add("[UNK]", EntryKind::kSpecial);
    v.add("[CLS]", EntryKind::kSpecial);
    v.add("[SEP]", EntryKind::kSpecial);
    v.add("[MASK]", EntryKind::kSpecial);
    return v;
}

TokenId Vocabulary::add(std::string surface, EntryKind kind) {
    if (surface.empty()) {
        throw FormatError("vocabulary: empty surface");
    }
    const bool marked = surface.rfind(kContinuationMarker, 0) == 0;
    if (kind == EntryKind::kSubwordCont && !marked) {
        throw FormatError("vocabulary: continuation entry '" + surface + "' lacks the marker");
    }
    if (kind != EntryKind::kSubwordCont && marked) {
        throw FormatError("vocabulary: non-continuation entry '" + surface + "' carries the marker");
    }
    auto [it, inserted] = index_.emplace(surface, entries_.size());
    if (!inserted) {
        throw FormatError("vocabulary: duplicate surface '" + surface + "'");
    }
    if (kind == EntryKind::kWhole) {
        whole_count_ += 1;
    }
    if (kind == EntryKind::kWhole || kind == EntryKind::kSubwordStart) {
        max_start_piece_bytes_ = std::max(max_start_piece_bytes_, surface.size());
    }
    if (kind == EntryKind::kSubwordCont) {
        max_continuation_bytes_ = std::max(max_continuation_bytes_, surface.size() - 2);
    }
    entries_.push_back({std::move(surface), kind});
    return entries_.size() - 1;
}

const Vocabulary::Entry& Vocabulary::entry(TokenId id) const {
    if (id >= entries_.size()) {
        throw IndexError("vocabulary: id " + std::to_string(id) + " out of range (" +
                         std::to_string(entries_.size()) + " entries)");
    }
    return entries_[id];
}

std::optional<TokenId> Vocabulary::find(const std::string& surface) const {
    auto it = index_.find(surface);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::optional<TokenId> Vocabulary::find_whole(const std::string& word) const {
    auto it = index_.find(word);
    if (it == index_.end() || entries_[it->second].kind != EntryKind::kWhole) return std::nullopt;
    return it->second;
}

std::optional<TokenId> Vocabulary::find_word_start(const std::string& piece) const {
    auto it = index_.find(piece);
    if (it == index_.end()) return std::nullopt;
    const EntryKind k = entries_[it->second].kind;
    if (k != EntryKind::kWhole && k != EntryKind::kSubwordStart) return std::nullopt;
    return it->second;
}

std::optional<TokenId> Vocabulary::find_continuation(const std::string& piece) const {
    auto it = index_.find(kContinuationMarker + piece);
    if (it == index_.end() || entries_[it->second].kind != EntryKind::kSubwordCont) return std::nullopt;
    return it->second;
}

std::string Vocabulary::canonical_text() const {
    std::ostringstream out;
    const std::size_t subword = entries_.size() - kNumSpecials - whole_count_;
    out << "naenc-vocab 1 " << entries_.size() << ' ' << whole_count_ << ' ' << subword << '\n';
    for (const Entry& e : entries_) {
        out << entry_kind_name(e.kind) << '\t' << e.surface << '\n';
    }
    return out.str();
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw FormatError("vocabulary: cannot open '" + path + "' for writing");
    }
    out << canonical_text();
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("vocabulary: cannot open '" + path + "'");
    }
    std::string header;
    if (!std::getline(in, header)) {
        throw FormatError("vocabulary: '" + path + "' is empty");
    }
    std::istringstream head(header);
    std::string tag;
    int version = 0;
    std::size_t entries = 0, whole = 0, subword = 0;
    head >> tag >> version >> entries >> whole >> subword;
    if (tag != "naenc-vocab" || version != 1) {
        throw FormatError("vocabulary: '" + path + "' has an unrecognized header");
    }

    Vocabulary v;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            throw FormatError("vocabulary: malformed line '" + line + "'");
        }
        v.add(line.substr(tab + 1), parse_kind(line.substr(0, tab)));
    }
    if (v.size() != entries || v.whole_count() != whole) {
        throw FormatError("vocabulary: header counts disagree with the entry list");
    }
    if (v.size() < kNumSpecials || v.surface(kPadId) != "[PAD]" || v.surface(kUnkId) != "[UNK]" ||
        v.surface(kClsId) != "[CLS]" || v.surface(kSepId) != "[SEP]" || v.surface(kMaskId) != "[MASK]") {
        throw FormatError("vocabulary: special tokens missing or out of order");
    }
    return v;
}

std::uint64_t Vocabulary::hash() const {
    return fnv1a64(canonical_text());
}

std::string Vocabulary::hash_hex() const {
    std::ostringstream out;
    out << std::hex << hash();
    return out.str();
}

} // namespace naenc
