#pragma once

// TF-IDF over the most document-frequent (1,3)-grams and a multinomial
// Naive Bayes classifier on the fractional TF-IDF weights.

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mirth/datasets.hpp"
#include "mirth/error.hpp"
#include "mirth/text.hpp"

namespace mirth {

inline constexpr std::size_t kDefaultMaxFeatures = 3000;

struct SparseVector {
    std::vector<std::pair<std::size_t, double>> entries;  // sorted by index

    bool empty() const { return entries.empty(); }
    double norm() const {
        double s = 0.0;
        for (const auto& [i, v] : entries) s += v * v;
        return std::sqrt(s);
    }
};

inline SparseVector l2_normalize(SparseVector v) {
    const double n = v.norm();
    if (n > 0.0) {
        for (auto& [i, x] : v.entries) x /= n;
    }
    return v;
}

struct NgramVocabulary {
    std::vector<std::string> grams;  // feature index -> gram (space-joined)
    std::vector<double> idf;
    std::unordered_map<std::string, std::size_t> index;
    int n_min = 1;
    int n_max = 3;

    std::size_t size() const { return grams.size(); }

    void rebuild_index() {
        index.clear();
        for (std::size_t i = 0; i < grams.size(); ++i) index.emplace(grams[i], i);
    }
};

inline std::vector<std::string> gram_strings(std::string_view text, int n_min, int n_max) {
    std::vector<std::string> out;
    for (const auto& g : extract_ngrams(tokenize(text), n_min, n_max)) out.push_back(join_ngram(g));
    return out;
}

/// Keeps the max_features grams with the highest document frequency (ties by
/// gram string); smoothed idf = ln((1 + N) / (1 + df)) + 1.
inline NgramVocabulary fit_vocabulary(const std::vector<std::string>& train_texts,
                                      std::size_t max_features = kDefaultMaxFeatures, int n_min = 1,
                                      int n_max = 3) {
    if (train_texts.empty()) throw DataError("cannot fit a vocabulary on an empty training set");
    std::unordered_map<std::string, std::size_t> df;
    for (const auto& text : train_texts) {
        auto grams = gram_strings(text, n_min, n_max);
        std::sort(grams.begin(), grams.end());
        grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
        for (auto& g : grams) ++df[g];
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(df.begin(), df.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (ranked.size() > max_features) ranked.resize(max_features);

    NgramVocabulary vocab;
    vocab.n_min = n_min;
    vocab.n_max = n_max;
    const auto n_docs = static_cast<double>(train_texts.size());
    for (const auto& [g, d] : ranked) {
        vocab.grams.push_back(g);
        vocab.idf.push_back(std::log((1.0 + n_docs) / (1.0 + static_cast<double>(d))) + 1.0);
    }
    vocab.rebuild_index();
    return vocab;
}

/// Raw counts times idf, L2-normalized; out-of-vocabulary grams are ignored.
inline SparseVector tfidf_transform(const NgramVocabulary& vocab, std::string_view text) {
    std::map<std::size_t, double> counts;
    for (const auto& g : gram_strings(text, vocab.n_min, vocab.n_max)) {
        auto it = vocab.index.find(g);
        if (it != vocab.index.end()) counts[it->second] += 1.0;
    }
    SparseVector v;
    for (const auto& [i, c] : counts) v.entries.emplace_back(i, c * vocab.idf[i]);
    return l2_normalize(std::move(v));
}

struct NaiveBayesModel {
    std::array<double, 2> class_log_prior{};                       // indexed by Label
    std::array<std::vector<double>, 2> feature_log_likelihood;     // [label][feature]
    double smoothing_alpha = 1.0;
};

struct NbPrediction {
    Label label = Label::NonJoke;
    std::array<double, 2> log_scores{};
};

inline NaiveBayesModel train_nb(const std::vector<SparseVector>& vectors, const std::vector<Label>& labels,
                                std::size_t n_features, double alpha = 1.0) {
    if (vectors.size() != labels.size()) throw UsageError("vectors and labels differ in length");
    if (!(alpha > 0.0)) throw UsageError("smoothing alpha must be positive");
    std::array<std::size_t, 2> class_count{};
    for (Label l : labels) ++class_count[static_cast<int>(l)];
    if (class_count[0] == 0 || class_count[1] == 0) {
        throw DataError("Naive Bayes needs at least one example of each class");
    }
    NaiveBayesModel m;
    m.smoothing_alpha = alpha;
    std::array<std::vector<double>, 2> mass{std::vector<double>(n_features, 0.0),
                                            std::vector<double>(n_features, 0.0)};
    for (std::size_t k = 0; k < vectors.size(); ++k) {
        auto& row = mass[static_cast<int>(labels[k])];
        for (const auto& [i, v] : vectors[k].entries) {
            if (i >= n_features) throw UsageError("feature index out of range");
            row[i] += v;
        }
    }
    const auto n = static_cast<double>(labels.size());
    for (int c = 0; c < 2; ++c) {
        m.class_log_prior[c] = std::log(static_cast<double>(class_count[c]) / n);
        double total = 0.0;
        for (double x : mass[c]) total += x;
        const double denom = total + alpha * static_cast<double>(n_features);
        m.feature_log_likelihood[c].resize(n_features);
        for (std::size_t i = 0; i < n_features; ++i) {
            m.feature_log_likelihood[c][i] = std::log((mass[c][i] + alpha) / denom);
        }
    }
    return m;
}

/// Ties go to NONJOKE.
inline NbPrediction predict_nb(const NaiveBayesModel& m, const SparseVector& x) {
    NbPrediction p;
    for (int c = 0; c < 2; ++c) {
        double s = m.class_log_prior[c];
        for (const auto& [i, v] : x.entries) s += v * m.feature_log_likelihood[c][i];
        p.log_scores[c] = s;
    }
    p.label = p.log_scores[1] > p.log_scores[0] ? Label::Joke : Label::NonJoke;
    return p;
}

/// Vocabulary plus model, the unit that is trained, saved and evaluated.
struct NbClassifier {
    NgramVocabulary vocab;
    NaiveBayesModel model;

    static NbClassifier fit(const std::vector<LabeledExample>& train, double alpha = 1.0,
                            std::size_t max_features = kDefaultMaxFeatures) {
        std::vector<std::string> texts;
        std::vector<Label> labels;
        for (const auto& x : train) {
            texts.push_back(x.text);
            labels.push_back(x.label);
        }
        NbClassifier c;
        c.vocab = fit_vocabulary(texts, max_features);
        std::vector<SparseVector> vectors;
        for (const auto& t : texts) vectors.push_back(tfidf_transform(c.vocab, t));
        c.model = train_nb(vectors, labels, c.vocab.size(), alpha);
        return c;
    }

    NbPrediction predict(std::string_view text) const { return predict_nb(model, tfidf_transform(vocab, text)); }
};

// ---------------------------------------------------------------------------
// Persistence:
//   MIRTH-NB v1
//   alpha A
//   orders N_MIN N_MAX
//   features V
//   prior LOGP_NONJOKE LOGP_JOKE
//   V lines: GRAM \t IDF \t LOGLIK_NONJOKE \t LOGLIK_JOKE
//   end

inline constexpr const char* kNbHeader = "MIRTH-NB v1";

inline void save_nb(const NbClassifier& c, std::ostream& out) {
    out << std::setprecision(17);
    out << kNbHeader << '\n';
    out << "alpha\t" << c.model.smoothing_alpha << '\n';
    out << "orders\t" << c.vocab.n_min << '\t' << c.vocab.n_max << '\n';
    out << "features\t" << c.vocab.size() << '\n';
    out << "prior\t" << c.model.class_log_prior[0] << '\t' << c.model.class_log_prior[1] << '\n';
    for (std::size_t i = 0; i < c.vocab.size(); ++i) {
        out << c.vocab.grams[i] << '\t' << c.vocab.idf[i] << '\t' << c.model.feature_log_likelihood[0][i] << '\t'
            << c.model.feature_log_likelihood[1][i] << '\n';
    }
    out << "end\n";
}

inline NbClassifier load_nb(std::istream& in, const std::string& origin = "<stream>") {
    std::string line;
    std::size_t lineno = 0;
    auto fail = [&](const std::string& what) -> void {
        throw DataError(origin + ":" + std::to_string(lineno) + ": " + what);
    };
    auto next_fields = [&]() {
        if (!std::getline(in, line)) {
            ++lineno;
            fail("unexpected end of file");
        }
        ++lineno;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, '\t')) cols.push_back(col);
        return cols;
    };
    auto number = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            double v = std::stod(s, &used);
            if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            fail("malformed number '" + s + "'");
        }
        return 0.0;
    };
    auto expect = [&](const char* key, std::size_t n) {
        auto cols = next_fields();
        if (cols.size() != n + 1 || cols[0] != key) fail(std::string("expected '") + key + "' record");
        return cols;
    };

    if (!std::getline(in, line) || line != kNbHeader) {
        lineno = 1;
        fail(std::string("missing header '") + kNbHeader + "'");
    }
    ++lineno;
    NbClassifier c;
    c.model.smoothing_alpha = number(expect("alpha", 1)[1]);
    auto orders = expect("orders", 2);
    c.vocab.n_min = static_cast<int>(number(orders[1]));
    c.vocab.n_max = static_cast<int>(number(orders[2]));
    const auto v = static_cast<std::size_t>(number(expect("features", 1)[1]));
    auto prior = expect("prior", 2);
    c.model.class_log_prior = {number(prior[1]), number(prior[2])};
    for (std::size_t i = 0; i < v; ++i) {
        auto cols = next_fields();
        if (cols.size() != 4) fail("feature record needs 4 fields");
        c.vocab.grams.push_back(cols[0]);
        c.vocab.idf.push_back(number(cols[1]));
        c.model.feature_log_likelihood[0].push_back(number(cols[2]));
        c.model.feature_log_likelihood[1].push_back(number(cols[3]));
    }
    auto tail = next_fields();
    if (tail.size() != 1 || tail[0] != "end") fail("expected end marker");
    c.vocab.rebuild_index();
    return c;
}

}  // namespace mirth
