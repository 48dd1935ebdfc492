#include "naenc/ablate.hpp"

#include <sstream>

#include "naenc/errors.hpp"

namespace naenc {

namespace {

struct ArmSpec {
    std::string name;
    bool skipped = false;
    std::string sublayer_order;    // empty = base
    std::string attention_variant; // empty = base
    std::string masking_scheme;    // empty = base
    std::string chunking_mode;     // empty = base
};

std::vector<ArmSpec> arms_for_axis(const std::string& axis) {
    if (axis == "masking") {
        return {
            {"standard_mlm", false, "", "", "standard", ""},
            {"w_pos", true, "", "", "", ""}, // needs an external POS tagger
            {"entity", false, "", "", "entity", ""},
            {"noun_phrase", false, "", "", "noun_phrase", ""},
        };
    }
    if (axis == "attention") {
        return {
            {"SA", false, "SA->FFN", "SA", "", ""},
            {"REL_QK", false, "SA->FFN", "REL_QK", "", ""},
            {"REL_QV", false, "SA->FFN", "REL_QV", "", ""},
            {"entity_self_attention", true, "", "", "", ""}, // mechanism under-specified
            {"NAA", false, "NAA->FFN", "SA", "", ""},
        };
    }
    if (axis == "stacking") {
        return {
            {"SA->FFN", false, "SA->FFN", "", "", ""},
            {"NAA->FFN", false, "NAA->FFN", "", "", ""},
            {"SA->SA->FFN", false, "SA->SA->FFN", "", "", ""},
            {"NAA->NAA->FFN", false, "NAA->NAA->FFN", "", "", ""},
            {"NAA->SA->FFN", false, "NAA->SA->FFN", "", "", ""},
            {"SA->NAA->FFN", false, "SA->NAA->FFN", "", "", ""},
        };
    }
    if (axis == "chunking") {
        return {
            {"without_chunking", false, "", "", "", "none"},
            {"sentence_chunking", false, "", "", "", "sentence"},
            {"sentence_chunking_overlap_128", false, "", "", "", "sentence_overlap_128"},
        };
    }
    throw ConfigError("ablate: unknown axis '" + axis +
                      "' (expected masking, attention, stacking or chunking)");
}

} // namespace

std::vector<AblationArm> run_ablation(const std::string& axis,
                                      const RunConfig& base,
                                      const std::vector<Document>& corpus,
                                      const Vocabulary& vocab,
                                      const CleanRules& rules,
                                      const PosLexicon& lexicon) {
    std::vector<AblationArm> results;
    for (const ArmSpec& spec : arms_for_axis(axis)) {
        AblationArm arm;
        arm.axis = axis;
        arm.name = spec.name;
        if (spec.skipped) {
            arm.status = "skipped (out of scope)";
            results.push_back(std::move(arm));
            continue;
        }

        try {
            RunConfig config = base;
            if (!spec.sublayer_order.empty()) config.set("sublayer_order", spec.sublayer_order);
            if (!spec.attention_variant.empty()) config.set("attention_variant", spec.attention_variant);
            if (!spec.masking_scheme.empty()) config.set("masking_scheme", spec.masking_scheme);
            if (!spec.chunking_mode.empty()) config.set("chunking_mode", spec.chunking_mode);

            PreprocessOptions popt;
            popt.scheme = parse_masking_scheme(config.get_string_or("masking_scheme", "noun_phrase"));
            popt.chunking = parse_chunking_mode(config.get_string_or("chunking_mode", "sentence"));
            popt.chunk_max_words = static_cast<std::size_t>(config.get_int_or("chunk_max_words", 300));
            popt.mask_budget = config.get_real_or("mask_budget", 0.15);
            popt.max_sequence_length = static_cast<std::size_t>(config.get_int_or("max_sequence_length", 128));
            popt.skip_cleaning = config.get_bool_or("skip_cleaning", false);
            popt.seed = config.seed();
            PreprocessResult prep = preprocess_corpus(corpus, vocab, rules, lexicon, popt);
            if (prep.examples.empty()) {
                throw TrainError("preprocess produced no examples");
            }

            PretrainOptions topt;
            topt.max_steps = static_cast<std::size_t>(config.get_int_or("max_steps", 30));
            topt.warmup_steps = static_cast<std::size_t>(config.get_int_or("warmup_steps", 3));
            topt.batch_size = static_cast<std::size_t>(config.get_int_or("batch_size", 4));
            topt.checkpoint_every = 0;
            topt.peak_learning_rate = static_cast<real>(config.get_real_or("learning_rate", 1e-3));
            topt.adam_beta1 = static_cast<real>(config.get_real_or("adam_beta1", 0.9));
            topt.adam_beta2 = static_cast<real>(config.get_real_or("adam_beta2", 0.999));
            topt.adam_epsilon = static_cast<real>(config.get_real_or("adam_epsilon", 1e-6));
            topt.weight_decay = static_cast<real>(config.get_real_or("weight_decay", 0.01));
            topt.seed = config.seed();

            PretrainOutcome outcome = pretrain(prep.examples, config.encoder_config(vocab.size()),
                                               topt, "", vocab.hash_hex(), nullptr);
            arm.status = "ok";
            arm.steps = outcome.steps_run;
            arm.final_loss = outcome.final_loss;
            arm.has_loss = true;
        } catch (const std::exception& e) {
            arm.status = std::string("error: ") + e.what();
        }
        results.push_back(std::move(arm));
    }
    return results;
}

std::string ablation_csv(const std::vector<AblationArm>& arms) {
    std::ostringstream out;
    out << "axis,arm,status,steps,final_loss\n";
    for (const AblationArm& arm : arms) {
        std::string status = arm.status;
        for (char& c : status) {
            if (c == ',') c = ';';
        }
        out << arm.axis << ',' << arm.name << ',' << status << ',' << arm.steps << ',';
        if (arm.has_loss) out << format_real(static_cast<double>(arm.final_loss));
        out << '\n';
    }
    return out.str();
}

} // namespace naenc
