#pragma once

#include <string>
#include <vector>

#include "naenc/tokenizer.hpp"

namespace naenc {

// One extractive-QA example: passage, question, and the gold answer
// span(s) in character offsets into the passage.
struct QAExample {
    std::string id;
    std::string passage;
    std::string question;
    std::vector<std::string> answer_texts;
    std::vector<std::size_t> answer_starts; // aligned with answer_texts
};

// Versioned reader for the standard extractive-QA JSON layout (v1.1).
// A v2.0 header or any unanswerable-marked item is rejected with a format
// diagnostic.
std::vector<QAExample> read_qa_dataset(const std::string& path);

} // namespace naenc
