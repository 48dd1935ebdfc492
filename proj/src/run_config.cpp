#include "naenc/run_config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "naenc/errors.hpp"
#include "naenc/rng.hpp"

namespace naenc {

const std::vector<std::string>& RunConfig::known_keys() {
    static const std::vector<std::string> keys = {
        // model + schedule (snake_case of the standard hyperparameter table)
        "number_of_layers", "hidden_size", "ffn_inner_hidden_size", "attention_heads",
        "attention_head_size", "dropout", "warmup_steps", "learning_rate", "batch_size",
        "weight_decay", "max_steps", "learning_rate_decay", "adam_epsilon", "adam_beta1",
        "adam_beta2", "max_sequence_length",
        // architecture/ablation selectors
        "sublayer_order", "attention_variant", "max_relative_distance", "masking_scheme",
        "chunking_mode", "dropout_on_attention_probs", "dropout_on_sublayer_output",
        "layer_norm_eps",
        // corpus / preprocessing
        "corpus", "vocab", "clean_rules", "pos_lexicon", "chunk_max_words",
        "chunk_overlap_tokens", "mask_budget", "skip_cleaning",
        // io
        "checkpoint", "output", "seed", "checkpoint_every", "examples",
        // vocabulary building
        "vocab_target_size", "vocab_whole_fraction", "vocab_lowercase", "np_source",
        // qa fine-tuning
        "qa_train", "qa_dev", "qa_epochs", "qa_learning_rate", "qa_batch_size",
        "max_answer_length", "qa_max_steps",
        // evaluation
        "predictions", "golds",
    };
    return keys;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("config: cannot open '" + path + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return from_text(buffer.str());
}

RunConfig RunConfig::from_text(const std::string& text) {
    RunConfig config;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    auto trim = [](std::string s) {
        const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
        while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
        while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.pop_back();
        return s;
    };
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: line " + std::to_string(line_no) + " is not 'key = value'");
        }
        config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return config;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    const auto& keys = known_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
        throw ConfigError("config: unknown key '" + key + "'");
    }
    values_[key] = value;
}

bool RunConfig::has(const std::string& key) const { return values_.count(key) != 0; }

std::string RunConfig::get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) {
        throw ConfigError("config: required key '" + key + "' is missing");
    }
    return it->second;
}

std::string RunConfig::get_string_or(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

std::int64_t RunConfig::get_int(const std::string& key) const {
    const std::string text = get_string(key);
    try {
        std::size_t used = 0;
        const std::int64_t v = std::stoll(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' has non-integer value '" + text + "'");
    }
}

std::int64_t RunConfig::get_int_or(const std::string& key, std::int64_t fallback) const {
    return has(key) ? get_int(key) : fallback;
}

double RunConfig::get_real(const std::string& key) const {
    const std::string text = get_string(key);
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' has non-numeric value '" + text + "'");
    }
}

double RunConfig::get_real_or(const std::string& key, double fallback) const {
    return has(key) ? get_real(key) : fallback;
}

bool RunConfig::get_bool_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string text = get_string(key);
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError("config: key '" + key + "' has non-boolean value '" + text + "'");
}

EncoderStackConfig RunConfig::encoder_config(std::size_t vocab_size) const {
    EncoderStackConfig c;
    c.num_layers = static_cast<std::size_t>(get_int_or("number_of_layers", 2));
    c.sublayer_order = parse_sublayer_order(get_string_or("sublayer_order", "SA->NAA->FFN"));
    c.hidden_size = static_cast<std::size_t>(get_int_or("hidden_size", 128));
    c.ffn_inner_size = static_cast<std::size_t>(get_int_or("ffn_inner_hidden_size", 512));
    c.num_heads = static_cast<std::size_t>(get_int_or("attention_heads", 4));
    if (has("attention_head_size")) {
        const std::size_t head = static_cast<std::size_t>(get_int("attention_head_size"));
        if (head * c.num_heads != c.hidden_size) {
            throw ConfigError("config: attention_head_size * attention_heads must equal hidden_size");
        }
    }
    c.dropout_rate = static_cast<real>(get_real_or("dropout", 0.1));
    c.max_sequence_length = static_cast<std::size_t>(get_int_or("max_sequence_length", 128));
    c.vocab_size = vocab_size;
    const std::string variant = get_string_or("attention_variant", "SA");
    if (variant == "SA") c.self_attention_variant = AttentionVariant::kSelfAttention;
    else if (variant == "NAA") {
        // an all-NAA block is expressed through the sub-layer order instead
        throw ConfigError("config: attention_variant NAA is spelled via sublayer_order (e.g. NAA->FFN)");
    }
    else if (variant == "REL_QK") c.self_attention_variant = AttentionVariant::kRelativeQK;
    else if (variant == "REL_QV") c.self_attention_variant = AttentionVariant::kRelativeQV;
    else throw ConfigError("config: unknown attention_variant '" + variant + "'");
    c.max_relative_distance = static_cast<std::size_t>(get_int_or("max_relative_distance", 16));
    c.dropout_on_attention_probs = get_bool_or("dropout_on_attention_probs", true);
    c.dropout_on_sublayer_output = get_bool_or("dropout_on_sublayer_output", true);
    c.layer_norm_eps = static_cast<real>(get_real_or("layer_norm_eps", 1e-12));
    c.validate();

    const std::string decay = get_string_or("learning_rate_decay", "linear");
    if (decay != "linear" && decay != "Linear") {
        throw ConfigError("config: only linear learning_rate_decay is supported");
    }
    return c;
}

std::string RunConfig::canonical_text() const {
    std::ostringstream out;
    for (const auto& [key, value] : values_) {
        out << key << " = " << value << '\n';
    }
    return out.str();
}

std::string RunConfig::fingerprint() const {
    std::ostringstream out;
    out << std::hex << fnv1a64(canonical_text());
    return out.str();
}

} // namespace naenc
