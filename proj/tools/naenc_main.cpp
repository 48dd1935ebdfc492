#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "naenc/ablate.hpp"
#include "naenc/checkpoint.hpp"
#include "naenc/errors.hpp"
#include "naenc/run_config.hpp"
#include "naenc/train.hpp"
#include "naenc/vocab_builder.hpp"

namespace fs = std::filesystem;
using namespace naenc;

namespace {

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides; // key=value
    std::int64_t seed = -1;
    std::string out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "flat key=value configuration file");
    cmd->add_option("--set", args.overrides, "override a config key (key=value), repeatable");
    cmd->add_option("--seed", args.seed, "override the run seed");
    cmd->add_option("--out", args.out_dir, "output directory");
}

RunConfig assemble_config(const CommonArgs& args) {
    RunConfig config;
    if (!args.config_path.empty()) {
        config = RunConfig::from_file(args.config_path);
    }
    for (const std::string& kv : args.overrides) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        }
        config.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (args.seed >= 0) {
        config.set("seed", std::to_string(args.seed));
    }
    if (!args.out_dir.empty()) {
        config.set("output", args.out_dir);
    }
    return config;
}

fs::path output_dir(const RunConfig& config) {
    const fs::path dir = config.get_string_or("output", "out");
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw FormatError("cannot open '" + path.string() + "' for writing");
    }
    out << text;
}

CleanRules load_rules(const RunConfig& config) {
    if (config.has("clean_rules")) {
        return CleanRules::load(config.get_string("clean_rules"));
    }
    return CleanRules{}; // no regex rules; length filters still apply
}

PosLexicon load_lexicon(const RunConfig& config) {
    if (config.has("pos_lexicon")) {
        return PosLexicon::load(config.get_string("pos_lexicon"));
    }
    return PosLexicon{};
}

NounPhraseSource np_source_for(const RunConfig& config, const std::vector<Document>& docs,
                               const PosLexicon& lexicon) {
    const std::string source = config.get_string_or("np_source", "auto");
    if (source != "annotation" && source != "heuristic" && source != "auto") {
        throw ConfigError("np_source must be annotation, heuristic or auto");
    }
    // index annotated spans by text so the span provider stays a pure
    // function of the text
    auto annotations = std::make_shared<std::map<std::string, std::vector<CharSpan>>>();
    if (source != "heuristic") {
        for (const Document& doc : docs) {
            if (doc.noun_phrase_spans) {
                (*annotations)[doc.text] = *doc.noun_phrase_spans;
            }
        }
    }
    auto lex = std::make_shared<PosLexicon>(lexicon);
    return [annotations, lex, source](const std::string& text) -> std::vector<CharSpan> {
        auto it = annotations->find(text);
        if (it != annotations->end()) return it->second;
        if (source == "annotation") return {};
        return heuristic_noun_phrase_spans(text, *lex);
    };
}

int cmd_build_vocab(const CommonArgs& args) {
    RunConfig config = assemble_config(args);
    const fs::path dir = output_dir(config);

    CleanCounters counters;
    const std::vector<Document> docs = read_corpus_file(config.get_string("corpus"), counters);
    std::vector<std::string> texts;
    texts.reserve(docs.size());
    for (const Document& doc : docs) texts.push_back(doc.text);

    VocabBuildOptions options;
    options.target_size = static_cast<std::size_t>(config.get_int_or("vocab_target_size", 1024));
    options.whole_form_fraction = config.get_real_or("vocab_whole_fraction", 0.7);
    options.lowercase_subwords = config.get_bool_or("vocab_lowercase", false);

    const PosLexicon lexicon = load_lexicon(config);
    const Vocabulary vocab = build_vocabulary(texts, np_source_for(config, docs, lexicon), options);

    const fs::path vocab_path = dir / "vocab.txt";
    vocab.save(vocab_path.string());
    std::cout << "wrote " << vocab_path.string() << " (" << vocab.size() << " entries, "
              << vocab.whole_count() << " whole-form)\n";
    return 0;
}

int cmd_preprocess(const CommonArgs& args) {
    RunConfig config = assemble_config(args);
    const fs::path dir = output_dir(config);

    const Vocabulary vocab = Vocabulary::load(config.get_string("vocab"));
    CleanCounters read_counters;
    const std::vector<Document> docs = read_corpus_file(config.get_string("corpus"), read_counters);

    PreprocessOptions options;
    options.scheme = parse_masking_scheme(config.get_string_or("masking_scheme", "noun_phrase"));
    options.chunking = parse_chunking_mode(config.get_string_or("chunking_mode", "sentence"));
    options.chunk_max_words = static_cast<std::size_t>(config.get_int_or("chunk_max_words", 300));
    options.mask_budget = config.get_real_or("mask_budget", 0.15);
    options.max_sequence_length = static_cast<std::size_t>(config.get_int_or("max_sequence_length", 128));
    options.skip_cleaning = config.get_bool_or("skip_cleaning", false);
    options.seed = config.seed();

    const CleanRules rules = load_rules(config);
    const PosLexicon lexicon = load_lexicon(config);
    PreprocessResult result = preprocess_corpus(docs, vocab, rules, lexicon, options);
    result.counters.malformed_lines += read_counters.malformed_lines;

    const fs::path examples_path = dir / "examples.jsonl";
    write_pretrain_examples(examples_path.string(), result.examples);
    write_text(dir / "preprocess_counters.json", result.counters.to_json() + "\n");
    std::cout << "wrote " << examples_path.string() << " (" << result.examples.size()
              << " examples from " << result.chunk_count << " chunks)\n";
    return 0;
}

int cmd_pretrain(const CommonArgs& args) {
    RunConfig config = assemble_config(args);
    const fs::path dir = output_dir(config);

    const Vocabulary vocab = Vocabulary::load(config.get_string("vocab"));
    const std::vector<PretrainExample> examples = read_pretrain_examples(config.get_string("examples"));
    const EncoderStackConfig model_config = config.encoder_config(vocab.size());

    PretrainOptions options;
    options.max_steps = static_cast<std::size_t>(config.get_int_or("max_steps", 300));
    options.warmup_steps = static_cast<std::size_t>(config.get_int_or("warmup_steps", 30));
    options.batch_size = static_cast<std::size_t>(config.get_int_or("batch_size", 8));
    options.checkpoint_every = static_cast<std::size_t>(config.get_int_or("checkpoint_every", 100));
    options.peak_learning_rate = static_cast<real>(config.get_real_or("learning_rate", 1e-3));
    options.adam_beta1 = static_cast<real>(config.get_real_or("adam_beta1", 0.9));
    options.adam_beta2 = static_cast<real>(config.get_real_or("adam_beta2", 0.999));
    options.adam_epsilon = static_cast<real>(config.get_real_or("adam_epsilon", 1e-6));
    options.weight_decay = static_cast<real>(config.get_real_or("weight_decay", 0.01));
    options.seed = config.seed();

    const fs::path checkpoint_path = dir / "checkpoint.bin";
    std::ostringstream log;
    const PretrainOutcome outcome =
        pretrain(examples, model_config, options, checkpoint_path.string(), vocab.hash_hex(), &log);
    write_text(dir / "loss_log.csv", log.str());
    std::cout << "pretrained " << outcome.steps_run << " steps, final loss "
              << format_real(static_cast<double>(outcome.final_loss)) << ", checkpoint "
              << checkpoint_path.string() << "\n";
    return 0;
}

int cmd_finetune_qa(const CommonArgs& args) {
    RunConfig config = assemble_config(args);
    const fs::path dir = output_dir(config);

    const Vocabulary vocab = Vocabulary::load(config.get_string("vocab"));
    const std::vector<QAExample> train_set = read_qa_dataset(config.get_string("qa_train"));
    const std::vector<QAExample> dev_set =
        read_qa_dataset(config.get_string_or("qa_dev", config.get_string("qa_train")));

    EncoderStackConfig model_config;
    ModelParams params;
    if (config.has("checkpoint")) {
        const LoadedCheckpoint loaded = load_checkpoint(config.get_string("checkpoint"));
        if (loaded.vocab_hash_hex != vocab.hash_hex()) {
            throw ConfigError("checkpoint was written with a different vocabulary (hash " +
                              loaded.vocab_hash_hex + " vs " + vocab.hash_hex() + ")");
        }
        model_config = loaded.config;
        params = restore_model(loaded);
    } else {
        model_config = config.encoder_config(vocab.size());
        params = build_model(model_config, config.seed());
    }

    FinetuneOptions options;
    options.max_steps = static_cast<std::size_t>(config.get_int_or("qa_max_steps", 0));
    options.epochs = static_cast<std::size_t>(config.get_int_or("qa_epochs", 3));
    options.batch_size = static_cast<std::size_t>(config.get_int_or("qa_batch_size", 8));
    options.learning_rate = static_cast<real>(config.get_real_or("qa_learning_rate", 3e-5));
    options.adam_beta1 = static_cast<real>(config.get_real_or("adam_beta1", 0.9));
    options.adam_beta2 = static_cast<real>(config.get_real_or("adam_beta2", 0.999));
    options.adam_epsilon = static_cast<real>(config.get_real_or("adam_epsilon", 1e-6));
    options.weight_decay = static_cast<real>(config.get_real_or("weight_decay", 0.01));
    options.max_answer_length = static_cast<std::size_t>(config.get_int_or("max_answer_length", 30));
    options.seed = config.seed();

    std::ostringstream log;
    FinetuneOutcome outcome =
        finetune_qa(train_set, dev_set, params, model_config, vocab, options, &log);
    outcome.report.config_fingerprint = config.fingerprint();

    const fs::path finetuned_path = dir / "finetuned.bin";
    save_checkpoint(finetuned_path.string(), params, model_config, vocab.hash_hex());
    write_text(dir / "qa_loss_log.csv", log.str());
    write_text(dir / "eval_report.json", outcome.report.to_json() + "\n");
    std::cout << "finetuned " << outcome.steps_run << " steps, dev EM "
              << format_real(outcome.report.em) << ", F1 " << format_real(outcome.report.f1)
              << ", report " << (dir / "eval_report.json").string() << "\n";
    return 0;
}

int cmd_eval(const CommonArgs& args) {
    RunConfig config = assemble_config(args);
    const fs::path dir = output_dir(config);

    // predictions: JSON object {id: answer text}
    std::ifstream in(config.get_string("predictions"), std::ios::binary);
    if (!in) {
        throw FormatError("cannot open predictions file");
    }
    nlohmann::json j;
    in >> j;
    std::vector<Prediction> predictions;
    for (auto it = j.begin(); it != j.end(); ++it) {
        predictions.push_back({it.key(), it.value().get<std::string>()});
    }

    const std::vector<QAExample> examples = read_qa_dataset(config.get_string("golds"));
    std::vector<GoldAnswers> golds;
    golds.reserve(examples.size());
    for (const QAExample& e : examples) {
        golds.push_back({e.id, e.answer_texts});
    }

    EvalReport report = evaluate_em_f1(predictions, golds);
    report.config_fingerprint = config.fingerprint();
    report.seed = config.seed();
    write_text(dir / "eval_report.json", report.to_json() + "\n");
    std::cout << "EM " << format_real(report.em) << ", F1 " << format_real(report.f1) << ", report "
              << (dir / "eval_report.json").string() << "\n";
    return 0;
}

int cmd_ablate(const std::string& axis, const CommonArgs& args) {
    RunConfig config = assemble_config(args);
    const fs::path dir = output_dir(config);

    const Vocabulary vocab = Vocabulary::load(config.get_string("vocab"));
    CleanCounters counters;
    const std::vector<Document> corpus = read_corpus_file(config.get_string("corpus"), counters);
    const CleanRules rules = load_rules(config);
    const PosLexicon lexicon = load_lexicon(config);

    const std::vector<AblationArm> arms = run_ablation(axis, config, corpus, vocab, rules, lexicon);
    const fs::path csv_path = dir / ("ablation_" + axis + ".csv");
    write_text(csv_path, ablation_csv(arms));
    for (const AblationArm& arm : arms) {
        std::cout << axis << " / " << arm.name << ": " << arm.status;
        if (arm.has_loss) {
            std::cout << " (final loss " << format_real(static_cast<double>(arm.final_loss)) << ")";
        }
        std::cout << "\n";
    }
    std::cout << "wrote " << csv_path.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale MLM pre-training stack with neighbor-aware attention"};
    app.require_subcommand(1);

    CommonArgs build_vocab_args, preprocess_args, pretrain_args, finetune_args, eval_args, ablate_args;
    std::string ablate_axis;

    add_common(app.add_subcommand("build-vocab", "build a vocabulary from a corpus"), build_vocab_args);
    add_common(app.add_subcommand("preprocess", "clean, chunk and mask a corpus"), preprocess_args);
    add_common(app.add_subcommand("pretrain", "run MLM pre-training"), pretrain_args);
    add_common(app.add_subcommand("finetune-qa", "fine-tune and evaluate extractive QA"), finetune_args);
    add_common(app.add_subcommand("eval", "score predictions against gold answers"), eval_args);
    CLI::App* ablate_cmd = app.add_subcommand("ablate", "run one comparison axis");
    ablate_cmd->add_option("--axis", ablate_axis, "masking | attention | stacking | chunking")
        ->required();
    add_common(ablate_cmd, ablate_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("build-vocab")) return cmd_build_vocab(build_vocab_args);
        if (app.got_subcommand("preprocess")) return cmd_preprocess(preprocess_args);
        if (app.got_subcommand("pretrain")) return cmd_pretrain(pretrain_args);
        if (app.got_subcommand("finetune-qa")) return cmd_finetune_qa(finetune_args);
        if (app.got_subcommand("eval")) return cmd_eval(eval_args);
        if (app.got_subcommand("ablate")) return cmd_ablate(ablate_axis, ablate_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
