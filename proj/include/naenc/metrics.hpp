#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "naenc/tensor.hpp"

namespace naenc {

// Extractive-QA answer normalization: lowercase, strip punctuation, drop
// the articles a/an/the, collapse whitespace.
std::string normalize_answer(const std::string& text);

// Exact normalized match against any reference.
double exact_match(const std::string& prediction, const std::vector<std::string>& references);

// Max over references of the token-overlap F1 (multiset overlap of
// normalized whitespace tokens).
double f1_score(const std::string& prediction, const std::vector<std::string>& references);

struct EvalRecord {
    std::string id;
    std::string prediction;
    std::vector<std::string> references;
    double em = 0;
    double f1 = 0;
};

struct EvalReport {
    double em = 0; // mean * 100
    double f1 = 0; // mean * 100
    std::vector<EvalRecord> records;
    std::string config_fingerprint;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> hyperparameters;

    std::string to_json() const;
};

struct Prediction {
    std::string id;
    std::string text;
};

struct GoldAnswers {
    std::string id;
    std::vector<std::string> texts;
};

// Per-example EM/F1 plus aggregates. Prediction and gold id sets must
// match exactly; offenders are listed in the error.
EvalReport evaluate_em_f1(const std::vector<Prediction>& predictions,
                          const std::vector<GoldAnswers>& golds);

} // namespace naenc
