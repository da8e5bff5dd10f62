#pragma once

// Minibatch training with Adam and global-norm clipping, the finite-difference
// gradient oracle, and random hyperparameter search.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "mirth/datasets.hpp"
#include "mirth/error.hpp"
#include "mirth/evaluation.hpp"
#include "mirth/nn/network.hpp"
#include "mirth/random.hpp"

namespace mirth::nn {

struct TrainConfig {
    double learning_rate = 1e-3;
    int epochs = 15;
    int batch_size = 64;
    double grad_clip_norm = 1.0;
    double adam_epsilon = 1e-8;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    std::uint64_t seed = 1;

    void validate() const {
        if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be positive");
        if (epochs < 1 || batch_size < 1) throw UsageError("epochs and batch_size must be >= 1");
        if (!(grad_clip_norm > 0.0)) throw UsageError("grad_clip_norm must be positive");
    }
};

struct TrainingTrace {
    std::vector<double> step_loss;
    std::vector<double> epoch_train_loss;
    std::vector<double> epoch_valid_accuracy;
    double max_clipped_norm = 0.0;  // largest global gradient norm after clipping
    std::size_t truncated_inputs = 0;
};

struct TrainedModel {
    Classifier model;
    TrainingTrace trace;
};

// ---------------------------------------------------------------------------
// Data preparation

struct Prepared {
    std::vector<Example> examples;
    std::size_t truncated = 0;
};

inline Prepared prepare(const Classifier& c, const std::vector<LabeledExample>& xs) {
    Prepared p;
    for (const auto& x : xs) {
        bool cut = false;
        Example e;
        e.input.a = c.encode_text(x.text, &cut);
        e.target = x.label == Label::Joke ? 1 : 0;
        p.truncated += cut;
        p.examples.push_back(std::move(e));
    }
    return p;
}

inline Prepared prepare(const Classifier& c, const std::vector<PairExample>& xs) {
    Prepared p;
    for (const auto& x : xs) {
        bool cut_a = false, cut_b = false;
        Example e;
        e.input.a = c.encode_text(x.text_a, &cut_a);
        e.input.b = c.encode_text(x.text_b, &cut_b);
        e.target = x.target == Side::A ? 1 : 0;
        p.truncated += cut_a + cut_b;
        p.examples.push_back(std::move(e));
    }
    return p;
}

/// Distinct normalized tokens of the texts, in first-seen order.
inline std::vector<std::string> dataset_words(const std::vector<LabeledExample>& xs) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto& x : xs) {
        for (const auto& t : tokenize(x.text)) {
            if (seen.insert(t.normalized).second) out.push_back(t.normalized);
        }
    }
    return out;
}

inline std::vector<std::string> dataset_words(const std::vector<PairExample>& xs) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto& x : xs) {
        for (const auto* text : {&x.text_a, &x.text_b}) {
            for (const auto& t : tokenize(*text)) {
                if (seen.insert(t.normalized).second) out.push_back(t.normalized);
            }
        }
    }
    return out;
}

inline double accuracy(const Classifier& c, const std::vector<Example>& xs) {
    if (xs.empty()) return 0.0;
    std::size_t ok = 0;
    for (const auto& x : xs) ok += c.predict(x.input) == x.target;
    return static_cast<double>(ok) / static_cast<double>(xs.size());
}

// ---------------------------------------------------------------------------
// Optimizer

inline double global_grad_norm(const std::vector<Param*>& params) {
    double s = 0.0;
    for (const auto* p : params) s += p->grad.squaredNorm();
    return std::sqrt(s);
}

/// Rescales all gradients so the global norm is at most max_norm; returns the
/// norm after clipping.
inline double clip_global_norm(const std::vector<Param*>& params, double max_norm) {
    const double norm = global_grad_norm(params);
    if (norm > max_norm) {
        const double scale = max_norm / norm;
        for (auto* p : params) p->grad *= scale;
        return global_grad_norm(params);
    }
    return norm;
}

class Adam {
public:
    Adam(double lr, double beta1, double beta2, double eps) : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

    void step(const std::vector<Param*>& params) {
        if (m_.empty()) {
            for (const auto* p : params) {
                m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
                v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
            }
        }
        ++t_;
        const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
        for (std::size_t k = 0; k < params.size(); ++k) {
            Param& p = *params[k];
            m_[k] = b1_ * m_[k] + (1.0 - b1_) * p.grad;
            v_[k] = b2_ * v_[k] + (1.0 - b2_) * p.grad.cwiseAbs2();
            p.value.array() -= lr_ * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + eps_);
        }
    }

private:
    double lr_, b1_, b2_, eps_;
    long t_ = 0;
    std::vector<Matrix> m_, v_;
};

// ---------------------------------------------------------------------------
// Training

/// Trains `model` in place on prepared examples. Single-threaded and fully
/// determined by (model init, data order, cfg.seed).
inline TrainingTrace fit(Classifier& model, const std::vector<Example>& train, const std::vector<Example>& valid,
                         const TrainConfig& cfg) {
    cfg.validate();
    if (train.empty()) throw DataError("empty training set");
    TrainingTrace trace;
    Rng order_rng(derive_seed(cfg.seed, "shuffle"));
    Rng dropout_rng(derive_seed(cfg.seed, "dropout"));
    Adam adam(cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon);
    const auto params = model.trainable_params();
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle(order, order_rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            model.zero_grad();
            double batch_loss = 0.0;
            for (std::size_t k = start; k < end; ++k) {
                const Example& x = train[order[k]];
                batch_loss += model.accumulate_gradients(x.input, x.target, &dropout_rng);
            }
            const auto n = static_cast<double>(end - start);
            for (auto* p : params) p->grad /= n;
            batch_loss /= n;
            if (!std::isfinite(batch_loss)) {
                throw RuntimeFailure("training diverged (non-finite loss at epoch " + std::to_string(epoch + 1) + ")");
            }
            const double norm = clip_global_norm(params, cfg.grad_clip_norm);
            if (!std::isfinite(norm)) throw RuntimeFailure("training diverged (non-finite gradient)");
            trace.max_clipped_norm = std::max(trace.max_clipped_norm, norm);
            adam.step(params);
            trace.step_loss.push_back(batch_loss);
            epoch_loss += batch_loss * n;
        }
        trace.epoch_train_loss.push_back(epoch_loss / static_cast<double>(train.size()));
        trace.epoch_valid_accuracy.push_back(valid.empty() ? 0.0 : accuracy(model, valid));
    }
    return trace;
}

/// Builds a classifier for the dataset and trains it. Trainable embedding
/// tables are restricted to the words of the dataset.
template <typename ExampleT>
TrainedModel train_classifier(const ModelConfig& config, const EmbeddingMatrix& embeddings,
                              const std::vector<ExampleT>& train, const std::vector<ExampleT>& valid,
                              const TrainConfig& cfg) {
    if (train.empty() || valid.empty()) throw DataError("training and validation sets must be non-empty");
    std::optional<std::vector<std::string>> restrict;
    if (config.embeddings_trainable) {
        std::vector<ExampleT> all(train);
        all.insert(all.end(), valid.begin(), valid.end());
        restrict = dataset_words(all);
    }
    TrainedModel out{Classifier(config, embeddings, cfg.seed, restrict ? &*restrict : nullptr), {}};
    const Prepared tr = prepare(out.model, train);
    const Prepared va = prepare(out.model, valid);
    out.trace = fit(out.model, tr.examples, va.examples, cfg);
    out.trace.truncated_inputs = tr.truncated + va.truncated;
    return out;
}

/// Pairwise training: trainable embeddings, two encoders.
inline TrainedModel train_pairwise(ModelConfig config, const EmbeddingMatrix& embeddings,
                                   const std::vector<PairExample>& train, const std::vector<PairExample>& valid,
                                   const TrainConfig& cfg) {
    config.pairwise = true;
    config.embeddings_trainable = true;
    return train_classifier(config, embeddings, train, valid, cfg);
}

// ---------------------------------------------------------------------------
// Gradient oracle

/// Max relative error |g_a - g_n| / max(1e-12, |g_a| + |g_n|) between analytic
/// gradients and central differences over `samples` random coordinates of the
/// trainable parameters (dropout off). Embedding coordinates are drawn from
/// rows the example touches.
inline double gradient_check(Classifier& model, const Example& example, double epsilon = 1e-5,
                             std::size_t samples = 200, std::uint64_t seed = 7) {
    model.zero_grad();
    model.accumulate_gradients(example.input, example.target, nullptr);
    auto params = model.trainable_params();
    if (params.empty()) throw UsageError("model has no trainable parameters");

    std::vector<int> rows = example.input.a;
    rows.insert(rows.end(), example.input.b.begin(), example.input.b.end());
    std::erase(rows, kPadId);

    Rng rng(seed);
    double worst = 0.0;
    std::size_t drawn = 0;
    while (drawn < samples) {
        Param& p = *params[uniform_index(rng, params.size())];
        Index r, c;
        if (p.name == "embedding") {
            if (rows.empty()) continue;
            r = rows[uniform_index(rng, rows.size())];
            c = static_cast<Index>(uniform_index(rng, static_cast<std::size_t>(p.value.cols())));
        } else {
            r = static_cast<Index>(uniform_index(rng, static_cast<std::size_t>(p.value.rows())));
            c = static_cast<Index>(uniform_index(rng, static_cast<std::size_t>(p.value.cols())));
        }
        const double saved = p.value(r, c);
        p.value(r, c) = saved + epsilon;
        const double up = model.loss(example.input, example.target);
        p.value(r, c) = saved - epsilon;
        const double down = model.loss(example.input, example.target);
        p.value(r, c) = saved;
        const double numeric = (up - down) / (2.0 * epsilon);
        const double analytic = p.grad(r, c);
        const double rel = std::abs(analytic - numeric) / std::max(1e-12, std::abs(analytic) + std::abs(numeric));
        worst = std::max(worst, rel);
        ++drawn;
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Random search

struct SearchSpace {
    double lr_min = 1e-3;
    double lr_max = 1e-1;
    std::vector<int> hidden_dims{8, 16, 32, 64, 128};
};

struct TrialRecord {
    int trial = 0;
    std::string model;
    double learning_rate = 0.0;
    std::optional<int> hidden_dim;  // LSTM only
    double validation_accuracy = 0.0;
    bool failed = false;
    std::string failure;
    std::vector<double> validation_trace;
    std::optional<EvalReport> test;
};

struct Hyperparameters {
    double learning_rate = 0.0;
    std::optional<int> hidden_dim;
};

/// The hyperparameters of trial `index`, drawn from a stream keyed by (seed, index).
inline Hyperparameters sample_hyperparameters(const SearchSpace& space, EncoderKind kind, std::uint64_t seed,
                                              int index) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(index)));
    Hyperparameters h;
    h.learning_rate = log_uniform(rng, space.lr_min, space.lr_max);
    if (kind == EncoderKind::Lstm) h.hidden_dim = space.hidden_dims[uniform_index(rng, space.hidden_dims.size())];
    return h;
}

struct SearchResult {
    std::vector<TrialRecord> trials;
    std::optional<TrainedModel> best;
    int best_trial = -1;
};

/// Trains n_trials sampled configurations, keeps the one with the highest
/// validation accuracy (earliest on ties) and evaluates only that one on test.
template <typename ExampleT>
SearchResult random_search(const SearchSpace& space, const ModelConfig& base_model, const TrainConfig& base_train,
                           const EmbeddingMatrix& embeddings, const DatasetSplit<ExampleT>& data, int n_trials,
                           std::uint64_t seed, const std::function<void(const TrialRecord&)>& on_trial = {}) {
    if (n_trials < 1) throw UsageError("random search needs at least one trial");
    SearchResult result;
    for (int t = 0; t < n_trials; ++t) {
        const Hyperparameters h = sample_hyperparameters(space, base_model.kind, seed, t);
        ModelConfig mc = base_model;
        if (h.hidden_dim) mc.hidden_dim = *h.hidden_dim;
        TrainConfig tc = base_train;
        tc.learning_rate = h.learning_rate;

        TrialRecord rec;
        rec.trial = t;
        rec.model = to_string(base_model.kind);
        rec.learning_rate = h.learning_rate;
        rec.hidden_dim = h.hidden_dim;
        try {
            TrainedModel tm = train_classifier(mc, embeddings, data.train, data.validation, tc);
            rec.validation_trace = tm.trace.epoch_valid_accuracy;
            rec.validation_accuracy = rec.validation_trace.back();
            if (!result.best || rec.validation_accuracy > result.trials[result.best_trial].validation_accuracy) {
                result.best = std::move(tm);
                result.best_trial = t;
            }
        } catch (const RuntimeFailure& e) {
            rec.failed = true;
            rec.failure = e.what();
        }
        result.trials.push_back(rec);
        if (on_trial) on_trial(rec);
    }
    if (result.best && !data.test.empty()) {
        const Prepared te = prepare(result.best->model, data.test);
        std::vector<Prediction> preds;
        for (std::size_t k = 0; k < data.test.size(); ++k) {
            preds.push_back({data.test[k].id, result.best->model.predict(te.examples[k].input) == 1, 0.0});
        }
        result.trials[result.best_trial].test = evaluate(preds, golds_of(data.test));
    }
    return result;
}

inline nlohmann::ordered_json to_json(const TrialRecord& r) {
    nlohmann::ordered_json hp = {{"learning_rate", r.learning_rate}};
    if (r.hidden_dim) hp["hidden_dimension"] = *r.hidden_dim;
    nlohmann::ordered_json j = {{"trial", r.trial},
                                {"model", r.model},
                                {"hyperparameters", hp},
                                {"validation_accuracy", r.validation_accuracy},
                                {"failed", r.failed},
                                {"validation_trace", r.validation_trace}};
    if (r.failed) j["failure"] = r.failure;
    j["test"] = r.test ? to_json(*r.test) : nlohmann::ordered_json(nullptr);
    return j;
}

/// Reads the validation accuracies of a trials JSONL file.
inline std::vector<double> read_trial_accuracies(std::istream& in, const std::string& origin = "<stream>") {
    std::vector<double> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (is_blank(line)) continue;
        try {
            auto j = nlohmann::json::parse(line);
            const double v = j.at("validation_accuracy").get<double>();
            if (!(v >= 0.0 && v <= 1.0)) throw DataError("validation_accuracy outside [0, 1]");
            out.push_back(v);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(origin + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError(origin + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace mirth::nn
