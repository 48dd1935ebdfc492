#include "naenc/squad.hpp"

#include <fstream>

#include <json.hpp>

#include "naenc/errors.hpp"

namespace naenc {

std::vector<QAExample> read_qa_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("qa dataset: cannot open '" + path + "'");
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("qa dataset: '" + path + "' is not valid JSON: " + e.what());
    }

    if (j.contains("version")) {
        const std::string version = j["version"].get<std::string>();
        if (version != "1.1" && version != "v1.1") {
            throw FormatError("qa dataset: reader supports version 1.1 only, file declares '" +
                              version + "'");
        }
    }

    std::vector<QAExample> examples;
    for (const auto& article : j.at("data")) {
        for (const auto& paragraph : article.at("paragraphs")) {
            const std::string context = paragraph.at("context").get<std::string>();
            for (const auto& qa : paragraph.at("qas")) {
                if (qa.contains("is_impossible") && qa["is_impossible"].get<bool>()) {
                    throw FormatError("qa dataset: item '" + qa.at("id").get<std::string>() +
                                      "' is marked unanswerable; the v1.1 reader rejects such items");
                }
                QAExample example;
                example.id = qa.at("id").get<std::string>();
                example.passage = context;
                example.question = qa.at("question").get<std::string>();
                for (const auto& answer : qa.at("answers")) {
                    example.answer_texts.push_back(answer.at("text").get<std::string>());
                    example.answer_starts.push_back(answer.at("answer_start").get<std::size_t>());
                }
                examples.push_back(std::move(example));
            }
        }
    }
    return examples;
}

} // namespace naenc
