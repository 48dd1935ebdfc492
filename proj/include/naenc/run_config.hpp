#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "naenc/encoder.hpp"

namespace naenc {

// Flat "key = value" configuration. '#' starts a comment. Unknown keys are
// rejected before any work starts; command-line overrides win over file
// values. Hyperparameter keys are the snake_case forms of the standard
// pre-training hyperparameter names (number_of_layers, hidden_size, ...).
class RunConfig {
public:
    RunConfig() = default;

    static RunConfig from_file(const std::string& path);
    static RunConfig from_text(const std::string& text);

    void set(const std::string& key, const std::string& value); // validates the key
    bool has(const std::string& key) const;

    std::string get_string(const std::string& key) const;
    std::string get_string_or(const std::string& key, const std::string& fallback) const;
    std::int64_t get_int(const std::string& key) const;
    std::int64_t get_int_or(const std::string& key, std::int64_t fallback) const;
    double get_real(const std::string& key) const;
    double get_real_or(const std::string& key, double fallback) const;
    bool get_bool_or(const std::string& key, bool fallback) const;

    std::uint64_t seed() const { return static_cast<std::uint64_t>(get_int_or("seed", 1)); }

    // Model section assembled from the hyperparameter keys; vocab_size is
    // supplied by the caller once the vocabulary is loaded.
    EncoderStackConfig encoder_config(std::size_t vocab_size) const;

    // Sorted key=value dump; its hash is the config fingerprint recorded in
    // reports.
    std::string canonical_text() const;
    std::string fingerprint() const;

    static const std::vector<std::string>& known_keys();

private:
    std::map<std::string, std::string> values_;
};

} // namespace naenc
