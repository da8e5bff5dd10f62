#pragma once

// Accuracy/F1 with normal-approximation confidence intervals, the expected
// maximum validation accuracy over n random hyperparameter trials, cross-domain
// joke rates and scoring of externally produced prediction files.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "mirth/datasets.hpp"
#include "mirth/error.hpp"

namespace mirth {

/// Item being scored; `positive` is JOKE for single texts and side A for pairs.
struct Gold {
    std::string id;
    bool positive = false;
    std::string source;
};

struct Prediction {
    std::string id;
    bool positive = false;
    double score = 0.0;
};

struct Confusion {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    std::size_t total() const { return tp + fp + fn + tn; }
};

struct SourceBreakdown {
    std::size_t n = 0;
    std::size_t correct = 0;
    double accuracy() const { return n ? static_cast<double>(correct) / static_cast<double>(n) : 0.0; }
};

struct EvalReport {
    std::size_t n = 0;
    double accuracy = 0.0;
    double ci_halfwidth = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    Confusion confusion;
    std::map<std::string, SourceBreakdown> per_source;
    std::string ci_method = "normal-approximation 95% (1.96*sqrt(p(1-p)/n))";
};

/// 95% normal-approximation halfwidth.
inline double binomial_ci_halfwidth(double p, std::size_t n) {
    if (n == 0) throw UsageError("confidence interval needs n >= 1");
    return 1.96 * std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(n));
}

inline double f1_score(const Confusion& c) {
    const double denom = 2.0 * static_cast<double>(c.tp) + static_cast<double>(c.fp) + static_cast<double>(c.fn);
    return denom > 0.0 ? 2.0 * static_cast<double>(c.tp) / denom : 0.0;
}

inline EvalReport evaluate(const std::vector<Prediction>& predictions, const std::vector<Gold>& golds) {
    std::unordered_map<std::string, const Prediction*> by_id;
    std::vector<std::string> duplicate;
    for (const auto& p : predictions) {
        if (!by_id.emplace(p.id, &p).second) duplicate.push_back(p.id);
    }
    std::vector<std::string> missing, extra;
    std::set<std::string> gold_ids;
    for (const auto& g : golds) {
        gold_ids.insert(g.id);
        if (!by_id.count(g.id)) missing.push_back(g.id);
    }
    for (const auto& p : predictions) {
        if (!gold_ids.count(p.id)) extra.push_back(p.id);
    }
    if (!missing.empty() || !extra.empty() || !duplicate.empty() || gold_ids.size() != golds.size()) {
        auto list = [](const std::vector<std::string>& ids) {
            std::string s;
            for (std::size_t i = 0; i < std::min<std::size_t>(ids.size(), 20); ++i) s += " " + ids[i];
            if (ids.size() > 20) s += " ...";
            return s;
        };
        std::string msg = "predictions do not match gold ids;";
        if (!missing.empty()) msg += " missing:" + list(missing) + ";";
        if (!extra.empty()) msg += " unexpected:" + list(extra) + ";";
        if (!duplicate.empty()) msg += " duplicated:" + list(duplicate) + ";";
        if (gold_ids.size() != golds.size()) msg += " duplicate gold ids;";
        throw DataError(msg);
    }
    if (golds.empty()) throw DataError("nothing to evaluate");

    EvalReport r;
    Confusion& c = r.confusion;
    for (const auto& g : golds) {
        const bool pred = by_id.at(g.id)->positive;
        if (pred && g.positive) ++c.tp;
        if (pred && !g.positive) ++c.fp;
        if (!pred && g.positive) ++c.fn;
        if (!pred && !g.positive) ++c.tn;
        auto& s = r.per_source[g.source.empty() ? "all" : g.source];
        ++s.n;
        if (pred == g.positive) ++s.correct;
    }
    r.n = golds.size();
    r.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(r.n);
    r.ci_halfwidth = binomial_ci_halfwidth(r.accuracy, r.n);
    r.precision = c.tp + c.fp ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
    r.recall = c.tp + c.fn ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
    r.f1 = f1_score(c);
    return r;
}

inline std::vector<Gold> golds_of(const std::vector<LabeledExample>& xs) {
    std::vector<Gold> g;
    for (const auto& x : xs) g.push_back({x.id, x.label == Label::Joke, x.source});
    return g;
}

inline std::vector<Gold> golds_of(const std::vector<PairExample>& xs) {
    std::vector<Gold> g;
    for (const auto& x : xs) g.push_back({x.id, x.target == Side::A, "pairs"});
    return g;
}

inline nlohmann::ordered_json to_json(const EvalReport& r) {
    nlohmann::ordered_json per = nlohmann::ordered_json::object();
    for (const auto& [src, s] : r.per_source) per[src] = {{"n", s.n}, {"accuracy", s.accuracy()}};
    return {{"n", r.n},
            {"accuracy", r.accuracy},
            {"ci_halfwidth", r.ci_halfwidth},
            {"ci_method", r.ci_method},
            {"precision", r.precision},
            {"recall", r.recall},
            {"f1", r.f1},
            {"confusion", {{"tp", r.confusion.tp}, {"fp", r.confusion.fp}, {"fn", r.confusion.fn}, {"tn", r.confusion.tn}}},
            {"per_source", per}};
}

inline std::string format_report(const EvalReport& r, const std::string& title) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(1);
    out << title << "\n";
    out << "  n         " << r.n << "\n";
    out << "  accuracy  " << 100.0 * r.accuracy << " +/- " << 100.0 * r.ci_halfwidth << " %\n";
    out << "  F1        " << 100.0 * r.f1 << " %\n";
    out << "  confusion tp=" << r.confusion.tp << " fp=" << r.confusion.fp << " fn=" << r.confusion.fn
        << " tn=" << r.confusion.tn << "\n";
    for (const auto& [src, s] : r.per_source) {
        out << "  " << src << ": " << 100.0 * s.accuracy() << " % of " << s.n << "\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Expected maximum validation accuracy

struct MaxAccCurve {
    std::vector<std::pair<std::size_t, double>> points;  // (n_trials, expected max)
};

/// E[max of n draws with replacement from the observed values]:
///   sum_i x_(i) * ((i/N)^n - ((i-1)/N)^n)  over the ascending order statistics,
/// evaluated by parts as x_(N) - sum_{i<N} (x_(i+1) - x_(i)) * (i/N)^n so that
/// every term shrinks monotonically with n.
inline double expected_max(std::vector<double> vals, std::size_t n) {
    if (vals.empty()) throw UsageError("expected maximum needs at least one observed trial");
    if (n == 0) throw UsageError("expected maximum needs n >= 1");
    const auto big_n = static_cast<double>(vals.size());
    if (n == 1) {
        double s = 0.0;
        for (double v : vals) s += v;
        return s / big_n;
    }
    std::sort(vals.begin(), vals.end());
    const auto nn = static_cast<double>(n);
    double below = 0.0;
    for (std::size_t i = 1; i < vals.size(); ++i) {
        below += (vals[i] - vals[i - 1]) * std::pow(static_cast<double>(i) / big_n, nn);
    }
    return vals.back() - below;
}

inline MaxAccCurve expected_max_curve(const std::vector<double>& val_accs, std::size_t max_n) {
    if (val_accs.empty()) throw UsageError("expected maximum needs at least one observed trial");
    MaxAccCurve c;
    for (std::size_t n = 1; n <= max_n; ++n) c.points.emplace_back(n, expected_max(val_accs, n));
    return c;
}

inline std::string curve_csv(const MaxAccCurve& c) {
    std::ostringstream out;
    out << "n,expected_max\n" << std::setprecision(17);
    for (const auto& [n, v] : c.points) out << n << ',' << v << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// Cross-domain rate

struct DomainRate {
    std::size_t n = 0;
    double rate = 0.0;
    double ci_halfwidth = 0.0;
};

/// Fraction of `texts` that `is_joke` labels as a joke.
template <typename Predictor>
DomainRate cross_domain_rate(Predictor&& is_joke, const std::vector<std::string>& texts) {
    if (texts.empty()) throw DataError("cross-domain corpus is empty");
    std::size_t jokes = 0;
    for (const auto& t : texts) {
        if (is_joke(t)) ++jokes;
    }
    DomainRate r;
    r.n = texts.size();
    r.rate = static_cast<double>(jokes) / static_cast<double>(r.n);
    r.ci_halfwidth = binomial_ci_halfwidth(r.rate, r.n);
    return r;
}

// ---------------------------------------------------------------------------
// External predictions: {"id", "pred", "score"} per line.

inline std::vector<Prediction> read_external_predictions(std::istream& in, bool pairwise,
                                                         const std::string& origin = "<stream>") {
    std::vector<Prediction> out;
    std::string line;
    std::size_t lineno = 0;
    auto fail = [&](const std::string& what) {
        throw DataError(origin + ":" + std::to_string(lineno) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (is_blank(line)) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            fail(e.what());
        }
        if (!j.is_object() || !j.contains("id") || !j["id"].is_string()) fail("missing string field \"id\"");
        if (!j.contains("pred") || !j["pred"].is_string()) fail("missing string field \"pred\"");
        Prediction p;
        p.id = j["id"].get<std::string>();
        const auto pred = j["pred"].get<std::string>();
        if (pairwise) {
            if (pred != "a" && pred != "b") fail("invalid pairwise label \"" + pred + "\" (expected a or b)");
            p.positive = pred == "a";
        } else {
            if (pred != "joke" && pred != "nonjoke") fail("invalid label \"" + pred + "\" (expected joke or nonjoke)");
            p.positive = pred == "joke";
        }
        if (j.contains("score")) {
            if (!j["score"].is_number()) fail("\"score\" must be a number");
            p.score = j["score"].get<double>();
        }
        out.push_back(std::move(p));
    }
    return out;
}

/// Scores ride along but do not enter accuracy or F1.
inline EvalReport score_external(std::istream& preds, const std::vector<Gold>& gold, bool pairwise,
                                 const std::string& origin = "<stream>") {
    return evaluate(read_external_predictions(preds, pairwise, origin), gold);
}

}  // namespace mirth
