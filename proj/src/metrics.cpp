#include "naenc/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include <json.hpp>

#include "naenc/errors.hpp"

namespace naenc {

std::string normalize_answer(const std::string& text) {
    std::string lowered;
    lowered.reserve(text.size());
    for (char c : text) {
        const unsigned char u = static_cast<unsigned char>(c);
        if (u < 0x80 && std::ispunct(u)) continue;
        lowered += (u < 0x80) ? static_cast<char>(std::tolower(u)) : c;
    }

    std::istringstream words(lowered);
    std::string word;
    std::string out;
    while (words >> word) {
        if (word == "a" || word == "an" || word == "the") continue;
        if (!out.empty()) out += ' ';
        out += word;
    }
    return out;
}

namespace {

std::vector<std::string> normalized_tokens(const std::string& text) {
    std::istringstream in(normalize_answer(text));
    std::vector<std::string> tokens;
    std::string token;
    while (in >> token) tokens.push_back(token);
    return tokens;
}

double pair_f1(const std::string& prediction, const std::string& reference) {
    const std::vector<std::string> pred = normalized_tokens(prediction);
    const std::vector<std::string> gold = normalized_tokens(reference);
    if (pred.empty() || gold.empty()) {
        return pred.empty() && gold.empty() ? 1.0 : 0.0;
    }
    std::map<std::string, std::size_t> gold_counts;
    for (const std::string& t : gold) gold_counts[t] += 1;
    std::size_t overlap = 0;
    for (const std::string& t : pred) {
        auto it = gold_counts.find(t);
        if (it != gold_counts.end() && it->second > 0) {
            it->second -= 1;
            overlap += 1;
        }
    }
    if (overlap == 0) return 0.0;
    const double precision = static_cast<double>(overlap) / static_cast<double>(pred.size());
    const double recall = static_cast<double>(overlap) / static_cast<double>(gold.size());
    return 2.0 * precision * recall / (precision + recall);
}

} // namespace

double exact_match(const std::string& prediction, const std::vector<std::string>& references) {
    const std::string pred = normalize_answer(prediction);
    for (const std::string& ref : references) {
        if (pred == normalize_answer(ref)) return 1.0;
    }
    return 0.0;
}

double f1_score(const std::string& prediction, const std::vector<std::string>& references) {
    double best = 0.0;
    for (const std::string& ref : references) {
        best = std::max(best, pair_f1(prediction, ref));
    }
    return best;
}

std::string EvalReport::to_json() const {
    nlohmann::json j;
    j["metrics"]["em"] = em;
    j["metrics"]["f1"] = f1;
    j["config_fingerprint"] = config_fingerprint;
    j["seed"] = seed;
    nlohmann::json hp = nlohmann::json::object();
    for (const auto& [key, value] : hyperparameters) hp[key] = value;
    j["hyperparameters"] = hp;
    nlohmann::json examples = nlohmann::json::array();
    for (const EvalRecord& r : records) {
        nlohmann::json e;
        e["id"] = r.id;
        e["prediction"] = r.prediction;
        e["references"] = r.references;
        e["em"] = r.em;
        e["f1"] = r.f1;
        examples.push_back(std::move(e));
    }
    j["examples"] = std::move(examples);
    return j.dump(2);
}

EvalReport evaluate_em_f1(const std::vector<Prediction>& predictions,
                          const std::vector<GoldAnswers>& golds) {
    std::map<std::string, const GoldAnswers*> gold_by_id;
    for (const GoldAnswers& g : golds) gold_by_id[g.id] = &g;

    std::vector<std::string> missing_gold;
    std::vector<std::string> missing_pred;
    std::map<std::string, const Prediction*> pred_by_id;
    for (const Prediction& p : predictions) {
        pred_by_id[p.id] = &p;
        if (!gold_by_id.count(p.id)) missing_gold.push_back(p.id);
    }
    for (const GoldAnswers& g : golds) {
        if (!pred_by_id.count(g.id)) missing_pred.push_back(g.id);
    }
    if (!missing_gold.empty() || !missing_pred.empty()) {
        std::string message = "evaluate_em_f1: prediction/gold id mismatch;";
        if (!missing_gold.empty()) {
            message += " no gold for:";
            for (const std::string& id : missing_gold) message += " " + id;
            message += ";";
        }
        if (!missing_pred.empty()) {
            message += " no prediction for:";
            for (const std::string& id : missing_pred) message += " " + id;
        }
        throw EvalError(message);
    }

    EvalReport report;
    double em_sum = 0, f1_sum = 0;
    for (const GoldAnswers& g : golds) {
        const Prediction& p = *pred_by_id[g.id];
        EvalRecord record;
        record.id = g.id;
        record.prediction = p.text;
        record.references = g.texts;
        record.em = exact_match(p.text, g.texts);
        record.f1 = f1_score(p.text, g.texts);
        em_sum += record.em;
        f1_sum += record.f1;
        report.records.push_back(std::move(record));
    }
    if (!golds.empty()) {
        report.em = em_sum / static_cast<double>(golds.size()) * 100.0;
        report.f1 = f1_sum / static_cast<double>(golds.size()) * 100.0;
    }
    return report;
}

} // namespace naenc
