// mirth: command-line front end for the humor-detection pipeline.
//
// Every subcommand records the parameters it ran with next to its output:
// config.json inside output directories, FILE.config.json beside output files.
// Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mirth/datasets.hpp"
#include "mirth/dyntemplate.hpp"
#include "mirth/error.hpp"
#include "mirth/evaluation.hpp"
#include "mirth/naive_bayes.hpp"
#include "mirth/nn/checkpoint.hpp"
#include "mirth/nn/embeddings.hpp"
#include "mirth/nn/training.hpp"
#include "mirth/tagger.hpp"
#include "mirth/text.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "mirth 0.1.0";
constexpr const char* kNbFile = "model.nb";
constexpr const char* kNnFile = "model.nn";

// ---------------------------------------------------------------------------
// Run configuration

json run_config(const CLI::App& sub) {
    json j;
    j["version"] = kVersion;
    j["subcommand"] = sub.get_name();
    for (const CLI::Option* opt : sub.get_options()) {
        const std::string name = opt->get_single_name();
        if (name == "help") continue;
        if (opt->get_expected_max() == 0) {
            j[name] = opt->count() > 0;
            continue;
        }
        const auto& results = opt->results();
        j[name] = results.empty() ? opt->get_default_str() : results.back();
    }
    return j;
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    mirth::write_text_file(path, content);
}

void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

void write_dir_config(const fs::path& dir, const CLI::App& sub) { write_json(dir / "config.json", run_config(sub)); }

void write_sidecar_config(const fs::path& file, const CLI::App& sub, const json& extra = json::object()) {
    json j = run_config(sub);
    for (const auto& [k, v] : extra.items()) j[k] = v;
    write_json(file.string() + ".config.json", j);
}

void require_file(const std::string& path) {
    if (!fs::is_regular_file(path)) throw mirth::DataError("no such file: " + path);
}

std::string read_task(const fs::path& data_dir) { return mirth::read_manifest(data_dir).task; }

// ---------------------------------------------------------------------------
// Trained models as stored in a model directory

struct LoadedModel {
    std::optional<mirth::NbClassifier> nb;
    std::optional<mirth::nn::Classifier> net;

    bool pairwise() const { return net && net->config().pairwise; }

    mirth::Prediction predict(const mirth::LabeledExample& x) const {
        if (nb) {
            const auto p = nb->predict(x.text);
            return {x.id, p.label == mirth::Label::Joke, p.log_scores[1] - p.log_scores[0]};
        }
        const auto probs = net->probabilities({net->encode_text(x.text), {}});
        return {x.id, probs[1] > probs[0], probs[1]};
    }

    mirth::Prediction predict(const mirth::PairExample& x) const {
        const auto probs = net->probabilities({net->encode_text(x.text_a), net->encode_text(x.text_b)});
        return {x.id, probs[1] > probs[0], probs[1]};
    }

    bool is_joke(const std::string& text) const {
        return predict(mirth::LabeledExample{"", text, mirth::Label::NonJoke, ""}).positive;
    }
};

LoadedModel load_model_dir(const fs::path& dir) {
    LoadedModel m;
    if (fs::is_regular_file(dir / kNbFile)) {
        std::ifstream in(dir / kNbFile, std::ios::binary);
        m.nb = mirth::load_nb(in, (dir / kNbFile).string());
    } else if (fs::is_regular_file(dir / kNnFile)) {
        m.net = mirth::nn::load_checkpoint((dir / kNnFile).string());
    } else {
        throw mirth::DataError(dir.string() + ": no " + kNbFile + " or " + kNnFile + " found");
    }
    return m;
}

template <typename Example>
std::vector<mirth::Prediction> predict_all(const LoadedModel& m, const std::vector<Example>& xs) {
    std::vector<mirth::Prediction> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(m.predict(x));
    return out;
}

json to_json(const mirth::Prediction& p, bool pairwise) {
    return {{"id", p.id}, {"pred", pairwise ? (p.positive ? "a" : "b") : (p.positive ? "joke" : "nonjoke")},
            {"score", p.score}};
}

std::string predictions_jsonl(const std::vector<mirth::Prediction>& preds, bool pairwise) {
    std::ostringstream out;
    for (const auto& p : preds) out << to_json(p, pairwise).dump() << '\n';
    return out.str();
}

json trace_json(const mirth::nn::TrainingTrace& t) {
    return {{"epoch_train_loss", t.epoch_train_loss},
            {"epoch_valid_accuracy", t.epoch_valid_accuracy},
            {"max_clipped_norm", t.max_clipped_norm},
            {"truncated_inputs", t.truncated_inputs}};
}

// ---------------------------------------------------------------------------
// Subcommands

struct Options {
    // shared
    std::string in, out, source, data, embeddings, model, task = "single", split = "test";
    std::uint64_t seed = 1;
    // tagger
    std::string conllu;
    int tagger_epochs = 5;
    // generation
    std::string jokes, nonjokes, tagger_path, nonjoke_source;
    double percentile = 0.62;
    int chars_per_repl = 25, context = 3, resamples = 5;
    unsigned threads = 1;
    std::string ratios = "0.7,0.15,0.15";
    // training
    double lr = 1e-3, alpha = 1.0, dropout = 0.1;
    int epochs = 15, batch_size = 64, hidden_dim = 64, channels = 64, max_len = 64, trials = 10;
    std::string oov = "zero";
    bool trainable_embeddings = false;
    // evaluation
    std::string model_dir, corpus, preds;
};

void cmd_ingest(const Options& o, const CLI::App& sub) {
    require_file(o.in);
    const auto result = mirth::ingest_corpus(o.in, o.source);
    const fs::path dir(o.out);
    std::ostringstream docs;
    for (const auto& d : result.documents) docs << json{{"id", d.id}, {"text", d.raw_text}}.dump() << '\n';
    write_file(dir / "documents.jsonl", docs.str());
    write_json(dir / "ingest.json", {{"source", o.source},
                                     {"documents", result.documents.size()},
                                     {"duplicates_removed", result.duplicates_removed}});
    write_dir_config(dir, sub);
    std::cout << result.documents.size() << " documents (" << result.duplicates_removed << " duplicates removed)\n";
}

void cmd_train_tagger(const Options& o, const CLI::App& sub) {
    require_file(o.conllu);
    const auto sentences = mirth::read_conllu(o.conllu);
    const auto model = mirth::train_tagger(sentences, o.tagger_epochs, o.seed);
    if (fs::path(o.out).has_parent_path()) fs::create_directories(fs::path(o.out).parent_path());
    mirth::save_tagger(model, o.out);
    write_sidecar_config(o.out, sub, {{"sentences", sentences.size()}, {"tagset", model.tagset}});
    std::cout << "trained on " << sentences.size() << " sentences, " << model.tagset.size() << " tags\n";
}

void cmd_tag(const Options& o, const CLI::App& sub) {
    require_file(o.in);
    require_file(o.model);
    const auto model = mirth::load_tagger(o.model);
    const auto docs = mirth::read_corpus(o.in, fs::path(o.in).stem().string());
    std::ostringstream out;
    for (const auto& d : docs) {
        out << "# sent_id = " << d.id << "\n# text = " << d.raw_text << '\n';
        const auto tagged = mirth::tag(model, d.tokens);
        for (std::size_t i = 0; i < tagged.size(); ++i) {
            out << i + 1 << '\t' << tagged[i].token.surface << "\t_\t" << tagged[i].pos << "\t_\t_\t_\t_\t_\t_\n";
        }
        out << '\n';
    }
    write_file(o.out, out.str());
    write_sidecar_config(o.out, sub);
}

void cmd_generate(const Options& o, const CLI::App& sub) {
    require_file(o.jokes);
    require_file(o.tagger_path);
    mirth::DTParams params;
    params.max_freq_percentile = o.percentile;
    params.chars_per_replacement = o.chars_per_repl;
    params.context_sample_size = o.context;
    params.max_context_resamples = o.resamples;
    params.rng_seed = o.seed;
    params.validate();
    const auto jokes = mirth::read_corpus(o.jokes, "jokes");
    const auto tagger = mirth::load_tagger(o.tagger_path);
    const auto negatives = mirth::generate_negative_corpus(jokes, tagger, params, o.threads);
    std::ostringstream out;
    mirth::write_negatives_jsonl(negatives, out);
    write_file(o.out, out.str());
    const double degenerate = mirth::degenerate_fraction(negatives);
    write_sidecar_config(o.out, sub, {{"negatives", negatives.size()}, {"degenerate_fraction", degenerate}});
    std::cout << negatives.size() << " negatives, degenerate fraction " << degenerate << '\n';
}

bool is_negatives_file(const std::string& path) {
    if (fs::path(path).extension() != ".jsonl") return false;
    std::ifstream in(path, std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
        if (mirth::is_blank(line)) continue;
        try {
            return nlohmann::json::parse(line).contains("source_id");
        } catch (const nlohmann::json::exception& e) {
            throw mirth::DataError(path + ": " + e.what());
        }
    }
    return false;
}

std::vector<mirth::NegativeExample> read_negatives(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw mirth::DataError("cannot read " + path);
    return mirth::read_negatives_jsonl(in, path);
}

void cmd_make_dataset(const Options& o, const CLI::App& sub) {
    const auto ratios = mirth::parse_ratios(o.ratios);
    require_file(o.jokes);
    require_file(o.nonjokes);
    const auto jokes = mirth::read_corpus(o.jokes, "jokes");
    const bool negatives = is_negatives_file(o.nonjokes);
    const fs::path dir(o.out);
    if (o.task == "pairwise") {
        if (!negatives) throw mirth::UsageError("pairwise datasets need a generated negatives file as --nonjokes");
        const auto ds = mirth::assemble_pairwise(jokes, read_negatives(o.nonjokes), ratios, o.seed);
        mirth::export_jsonl(ds, dir);
    } else if (negatives) {
        const auto ds = mirth::assemble_binary(jokes, read_negatives(o.nonjokes), ratios, o.seed);
        mirth::export_jsonl(ds, dir);
    } else {
        const std::string source = o.nonjoke_source.empty() ? fs::path(o.nonjokes).stem().string() : o.nonjoke_source;
        if (!mirth::known_sources().count(source) || source == "jokes") {
            throw mirth::UsageError("cannot infer a non-joke source from '" + o.nonjokes +
                                    "'; pass --nonjoke-source news|proverbs");
        }
        const auto ds = mirth::assemble_binary(jokes, mirth::read_corpus(o.nonjokes, source), source, ratios, o.seed);
        mirth::export_jsonl(ds, dir);
    }
    write_dir_config(dir, sub);
    const auto m = mirth::read_manifest(dir);
    std::cout << "train " << m.counts["train"].dump() << ", valid " << m.counts["valid"].dump() << ", test "
              << m.counts["test"].dump() << '\n';
}

mirth::nn::ModelConfig model_config(const Options& o, bool pairwise) {
    mirth::nn::ModelConfig mc;
    mc.kind = mirth::nn::parse_encoder_kind(o.model);
    mc.hidden_dim = o.hidden_dim;
    mc.channels = o.channels;
    mc.max_sequence_length = o.max_len;
    mc.dropout = o.dropout;
    mc.pairwise = pairwise;
    mc.embeddings_trainable = pairwise || o.trainable_embeddings;
    mc.validate();
    return mc;
}

mirth::nn::TrainConfig train_config(const Options& o) {
    mirth::nn::TrainConfig tc;
    tc.learning_rate = o.lr;
    tc.epochs = o.epochs;
    tc.batch_size = o.batch_size;
    tc.seed = o.seed;
    tc.validate();
    return tc;
}

mirth::nn::EmbeddingMatrix load_embeddings(const Options& o) {
    if (o.embeddings.empty()) throw mirth::UsageError("--embeddings is required for neural models");
    require_file(o.embeddings);
    auto e = mirth::nn::load_embeddings(o.embeddings, o.oov == "mean" ? mirth::nn::OovPolicy::Mean
                                                                        : mirth::nn::OovPolicy::Zero);
    for (const auto& w : e.warnings) std::cerr << "warning: " << w << '\n';
    return e;
}

void cmd_train(const Options& o, const CLI::App& sub) {
    const fs::path data(o.data), dir(o.out);
    const std::string task = read_task(data);
    if (task != o.task) throw mirth::UsageError("dataset task is '" + task + "' but --task is '" + o.task + "'");
    json summary;
    if (o.model == "nb") {
        if (task != "single") throw mirth::UsageError("nb supports the single task only");
        const auto ds = mirth::import_jsonl<mirth::LabeledExample>(data);
        const auto nb = mirth::NbClassifier::fit(ds.train, o.alpha);
        std::ostringstream out;
        mirth::save_nb(nb, out);
        write_file(dir / kNbFile, out.str());
        LoadedModel m;
        m.nb = nb;
        const auto report = mirth::evaluate(predict_all(m, ds.validation), mirth::golds_of(ds.validation));
        summary = {{"model", "nb"}, {"features", nb.vocab.size()}, {"validation", mirth::to_json(report)}};
    } else {
        const auto emb = load_embeddings(o);
        const auto mc = model_config(o, task == "pairwise");
        const auto tc = train_config(o);
        auto run = [&](const auto& ds) {
            const auto tm = mirth::nn::train_classifier(mc, emb, ds.train, ds.validation, tc);
            mirth::nn::save_checkpoint(tm.model, (dir / kNnFile).string());
            summary = {{"model", o.model},
                       {"model_config", mirth::nn::to_json(mc)},
                       {"training", trace_json(tm.trace)},
                       {"validation_accuracy", tm.trace.epoch_valid_accuracy.back()}};
        };
        fs::create_directories(dir);
        if (task == "pairwise") {
            run(mirth::import_jsonl<mirth::PairExample>(data));
        } else {
            run(mirth::import_jsonl<mirth::LabeledExample>(data));
        }
    }
    write_json(dir / "training.json", summary);
    write_dir_config(dir, sub);
    std::cout << summary.dump(2) << '\n';
}

void cmd_search(const Options& o, const CLI::App& sub) {
    if (o.model != "cnn" && o.model != "lstm") throw mirth::UsageError("search supports --model cnn|lstm");
    const fs::path data(o.data), dir(o.out);
    const std::string task = read_task(data);
    const auto emb = load_embeddings(o);
    const auto mc = model_config(o, task == "pairwise");
    const auto tc = train_config(o);
    fs::create_directories(dir);

    auto run = [&](const auto& ds) {
        auto log = [](const mirth::nn::TrialRecord& r) {
            std::cerr << "trial " << r.trial << ": lr=" << r.learning_rate;
            if (r.hidden_dim) std::cerr << " hidden=" << *r.hidden_dim;
            std::cerr << (r.failed ? " FAILED " + r.failure : " valid=" + std::to_string(r.validation_accuracy))
                      << '\n';
        };
        auto result = mirth::nn::random_search(mirth::nn::SearchSpace{}, mc, tc, emb, ds, o.trials, o.seed, log);
        std::ostringstream trials;
        std::vector<double> accs;
        for (const auto& r : result.trials) {
            trials << mirth::nn::to_json(r).dump() << '\n';
            if (!r.failed) accs.push_back(r.validation_accuracy);
        }
        write_file(dir / "trials.jsonl", trials.str());
        if (accs.empty()) throw mirth::RuntimeFailure("every trial failed");
        write_file(dir / "curve.csv", mirth::curve_csv(mirth::expected_max_curve(accs, accs.size())));
        mirth::nn::save_checkpoint(result.best->model, (dir / kNnFile).string());
        const auto& best = result.trials[static_cast<std::size_t>(result.best_trial)];
        write_json(dir / "best.json", mirth::nn::to_json(best));
        if (best.test) std::cout << mirth::format_report(*best.test, "best trial " + std::to_string(best.trial));
    };
    if (task == "pairwise") {
        run(mirth::import_jsonl<mirth::PairExample>(data));
    } else {
        run(mirth::import_jsonl<mirth::LabeledExample>(data));
    }
    write_dir_config(dir, sub);
}

template <typename Example>
void evaluate_split(const LoadedModel& m, const mirth::DatasetSplit<Example>& ds, const Options& o,
                    const CLI::App& sub) {
    const auto& xs = ds.split(o.split);
    const bool pairwise = std::is_same_v<Example, mirth::PairExample>;
    const auto preds = predict_all(m, xs);
    const auto report = mirth::evaluate(preds, mirth::golds_of(xs));
    std::cout << mirth::format_report(report, o.split);
    if (!o.out.empty()) {
        const fs::path dir(o.out);
        write_file(dir / "predictions.jsonl", predictions_jsonl(preds, pairwise));
        write_json(dir / "report.json", mirth::to_json(report));
        write_dir_config(dir, sub);
    }
}

void cmd_eval(const Options& o, const CLI::App& sub) {
    const fs::path data(o.data);
    const auto m = load_model_dir(o.model_dir);
    const std::string task = read_task(data);
    if ((task == "pairwise") != m.pairwise()) {
        throw mirth::UsageError("model and dataset disagree on the task (dataset: " + task + ")");
    }
    if (task == "pairwise") {
        evaluate_split(m, mirth::import_jsonl<mirth::PairExample>(data), o, sub);
    } else {
        evaluate_split(m, mirth::import_jsonl<mirth::LabeledExample>(data), o, sub);
    }
}

void cmd_cross_domain(const Options& o, const CLI::App& sub) {
    require_file(o.corpus);
    const auto m = load_model_dir(o.model_dir);
    if (m.pairwise()) throw mirth::UsageError("cross-domain needs a single-text model");
    std::vector<std::string> texts;
    for (const auto& d : mirth::read_corpus(o.corpus, fs::path(o.corpus).stem().string())) texts.push_back(d.raw_text);
    const auto r = mirth::cross_domain_rate([&](const std::string& t) { return m.is_joke(t); }, texts);
    std::cout << "labelled as joke: " << 100.0 * r.rate << " +- " << 100.0 * r.ci_halfwidth << " % of " << r.n
              << '\n';
    if (!o.out.empty()) {
        const fs::path dir(o.out);
        write_json(dir / "cross_domain.json", {{"n", r.n}, {"joke_rate", r.rate}, {"ci_halfwidth", r.ci_halfwidth}});
        write_dir_config(dir, sub);
    }
}

void cmd_score_external(const Options& o, const CLI::App& sub) {
    require_file(o.preds);
    const fs::path data(o.data);
    const bool pairwise = read_task(data) == "pairwise";
    std::vector<mirth::Gold> gold = pairwise
                                        ? mirth::golds_of(mirth::import_jsonl<mirth::PairExample>(data).split(o.split))
                                        : mirth::golds_of(mirth::import_jsonl<mirth::LabeledExample>(data).split(o.split));
    std::ifstream in(o.preds, std::ios::binary);
    const auto report = mirth::score_external(in, gold, pairwise, o.preds);
    std::cout << mirth::format_report(report, "external " + o.split);
    if (!o.out.empty()) {
        const fs::path dir(o.out);
        write_json(dir / "report.json", mirth::to_json(report));
        write_dir_config(dir, sub);
    }
}

// ---------------------------------------------------------------------------

void bind_environment(CLI::App& app) {
    for (CLI::App* sub : app.get_subcommands([](CLI::App*) { return true; })) {
        for (CLI::Option* opt : sub->get_options()) {
            std::string name = opt->get_single_name();
            if (name == "help") continue;
            std::string env = "MIRTH_";
            for (char c : name) env += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
            opt->envname(env);
        }
    }
}

/// CLI11 silently skips environment values that fail validation; reject them instead.
void check_environment(const CLI::App& sub) {
    for (const CLI::Option* opt : sub.get_options()) {
        const std::string& env = opt->get_envname();
        if (env.empty() || opt->count() > 0) continue;
        if (const char* value = std::getenv(env.c_str()); value && *value) {
            throw mirth::UsageError(env + "=" + value + " is not a valid value for --" + opt->get_single_name());
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Humor detection experiments: negatives generation, datasets, training and evaluation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    app.option_defaults()->always_capture_default();
    Options o;

    auto* ingest = app.add_subcommand("ingest", "Read, validate and deduplicate a corpus");
    ingest->add_option("--in", o.in, "Corpus file (one item per line, or JSONL with id/text)")->required();
    ingest->add_option("--source", o.source, "Source name")->required();
    ingest->add_option("--out", o.out, "Output directory")->required();

    auto* train_tagger = app.add_subcommand("train-tagger", "Train the part-of-speech tagger on CoNLL-U");
    train_tagger->add_option("--conllu", o.conllu, "Tagged training corpus")->required();
    train_tagger->add_option("--out", o.out, "Model file")->required();
    train_tagger->add_option("--epochs", o.tagger_epochs, "Perceptron epochs")->check(CLI::PositiveNumber);
    train_tagger->add_option("--seed", o.seed, "Shuffle seed");

    auto* tag = app.add_subcommand("tag", "Tag a corpus, writing CoNLL-U");
    tag->add_option("--model", o.model, "Tagger model")->required();
    tag->add_option("--in", o.in, "Corpus file")->required();
    tag->add_option("--out", o.out, "CoNLL-U output file")->required();

    auto* gen = app.add_subcommand("generate-negatives", "Generate dynamic-template negatives for each joke");
    gen->add_option("--jokes", o.jokes, "Joke corpus")->required();
    gen->add_option("--tagger", o.tagger_path, "Tagger model")->required();
    gen->add_option("--seed", o.seed, "Generation seed");
    gen->add_option("--percentile", o.percentile, "Maximum word-frequency percentile for slots");
    gen->add_option("--chars-per-repl", o.chars_per_repl, "Characters per required replacement");
    gen->add_option("--context", o.context, "Context jokes sampled per pool");
    gen->add_option("--resamples", o.resamples, "Context pool resamples on a part-of-speech miss");
    gen->add_option("--threads", o.threads, "Worker threads (output does not depend on it)");
    gen->add_option("--out", o.out, "Negatives JSONL file")->required();

    auto* make = app.add_subcommand("make-dataset", "Assemble labelled train/valid/test splits");
    make->add_option("--jokes", o.jokes, "Joke corpus")->required();
    make->add_option("--nonjokes", o.nonjokes, "Non-joke corpus or generated negatives JSONL")->required();
    make->add_option("--nonjoke-source", o.nonjoke_source, "Source name of a plain non-joke corpus");
    make->add_option("--task", o.task, "Task")->check(CLI::IsMember({"single", "pairwise"}));
    make->add_option("--seed", o.seed, "Split seed");
    make->add_option("--ratios", o.ratios, "Train,valid,test ratios");
    make->add_option("--out", o.out, "Dataset directory")->required();

    auto add_model_flags = [&](CLI::App* sub) {
        sub->add_option("--embeddings", o.embeddings, "Word vectors (text format)");
        sub->add_option("--oov", o.oov, "Vector for unknown words")->check(CLI::IsMember({"zero", "mean"}));
        sub->add_option("--seed", o.seed, "Training seed");
        sub->add_option("--epochs", o.epochs, "Epochs")->check(CLI::PositiveNumber);
        sub->add_option("--batch-size", o.batch_size, "Minibatch size")->check(CLI::PositiveNumber);
        sub->add_option("--hidden-dim", o.hidden_dim, "LSTM hidden size")->check(CLI::PositiveNumber);
        sub->add_option("--channels", o.channels, "CNN channels per layer")->check(CLI::PositiveNumber);
        sub->add_option("--max-len", o.max_len, "Maximum tokens per text")->check(CLI::PositiveNumber);
        sub->add_option("--dropout", o.dropout, "Dropout before the output layer")->check(CLI::Range(0.0, 0.99));
        sub->add_flag("--trainable-embeddings", o.trainable_embeddings, "Fine-tune word vectors (single task)");
    };

    auto* train = app.add_subcommand("train", "Train one model");
    train->add_option("--model", o.model, "Model")->required()->check(CLI::IsMember({"nb", "cnn", "lstm"}));
    train->add_option("--data", o.data, "Dataset directory")->required();
    train->add_option("--task", o.task, "Task")->check(CLI::IsMember({"single", "pairwise"}));
    train->add_option("--out", o.out, "Model directory")->required();
    train->add_option("--lr", o.lr, "Learning rate");
    train->add_option("--alpha", o.alpha, "Naive Bayes smoothing");
    add_model_flags(train);

    auto* search = app.add_subcommand("search", "Random hyperparameter search");
    search->add_option("--model", o.model, "Model")->required()->check(CLI::IsMember({"cnn", "lstm"}));
    search->add_option("--trials", o.trials, "Number of trials")->check(CLI::PositiveNumber);
    search->add_option("--data", o.data, "Dataset directory")->required();
    search->add_option("--out", o.out, "Output directory")->required();
    add_model_flags(search);

    auto* eval = app.add_subcommand("eval", "Evaluate a trained model on a dataset split");
    eval->add_option("--model-dir", o.model_dir, "Model directory")->required();
    eval->add_option("--data", o.data, "Dataset directory")->required();
    eval->add_option("--split", o.split, "Split")->check(CLI::IsMember({"train", "valid", "test"}));
    eval->add_option("--out", o.out, "Directory for predictions and report");

    auto* cross = app.add_subcommand("cross-domain", "Fraction of an unseen corpus labelled as jokes");
    cross->add_option("--model-dir", o.model_dir, "Model directory")->required();
    cross->add_option("--corpus", o.corpus, "Corpus file")->required();
    cross->add_option("--out", o.out, "Directory for the result");

    auto* external = app.add_subcommand("score-external", "Score predictions produced by another system");
    external->add_option("--preds", o.preds, "Predictions JSONL ({id, pred, score})")->required();
    external->add_option("--data", o.data, "Dataset directory")->required();
    external->add_option("--split", o.split, "Split")->check(CLI::IsMember({"train", "valid", "test"}));
    external->add_option("--out", o.out, "Directory for the report");

    bind_environment(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        for (const CLI::App* sub : app.get_subcommands()) check_environment(*sub);
        if (*ingest) cmd_ingest(o, *ingest);
        if (*train_tagger) cmd_train_tagger(o, *train_tagger);
        if (*tag) cmd_tag(o, *tag);
        if (*gen) cmd_generate(o, *gen);
        if (*make) cmd_make_dataset(o, *make);
        if (*train) cmd_train(o, *train);
        if (*search) cmd_search(o, *search);
        if (*eval) cmd_eval(o, *eval);
        if (*cross) cmd_cross_domain(o, *cross);
        if (*external) cmd_score_external(o, *external);
    } catch (const mirth::UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const mirth::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
