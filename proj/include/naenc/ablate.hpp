#pragma once

#include <string>
#include <vector>

#include "naenc/run_config.hpp"
#include "naenc/train.hpp"

namespace naenc {

struct AblationArm {
    std::string axis;
    std::string name;
    std::string status; // ok | skipped (out of scope) | error: ...
    std::size_t steps = 0;
    real final_loss = 0;
    bool has_loss = false;
};

// Arm lists mirror the published comparison tables; out-of-scope arms are
// listed and skipped with a notice. Every arm runs with the same seed and
// step budget; a failing arm is recorded and the rest continue.
std::vector<AblationArm> run_ablation(const std::string& axis,
                                      const RunConfig& base,
                                      const std::vector<Document>& corpus,
                                      const Vocabulary& vocab,
                                      const CleanRules& rules,
                                      const PosLexicon& lexicon);

std::string ablation_csv(const std::vector<AblationArm>& arms);

} // namespace naenc
