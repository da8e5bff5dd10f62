#pragma once

// Greedy left-to-right averaged-perceptron POS tagger.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mirth/error.hpp"
#include "mirth/random.hpp"
#include "mirth/text.hpp"

namespace mirth {

inline const std::string kPunctTag = "PUNCT";

struct TaggedToken {
    Token token;
    std::string pos;
};

using TaggedSentence = std::vector<std::pair<std::string, std::string>>;  // (form, tag)

struct TaggerModel {
    std::vector<std::string> tagset;  // sorted; excludes PUNCT unless seen on a word
    std::unordered_map<std::string, std::vector<double>> weights;  // feature -> weight per tag
    std::map<std::string, std::string> lexicon;                    // normalized word -> tag

    bool has_tag(const std::string& tag) const {
        return std::binary_search(tagset.begin(), tagset.end(), tag);
    }
};

namespace detail {

inline bool is_punct_form(std::string_view form) {
    std::size_t pos = 0;
    if (form.empty()) return false;
    const char32_t c = utf8::decode(form, pos);
    return pos == form.size() && classify(c) == CharClass::Punct;
}

inline std::string prefix_cps(const std::vector<char32_t>& cps, std::size_t n) {
    std::string out;
    for (std::size_t i = 0; i < std::min(n, cps.size()); ++i) utf8::append(out, cps[i]);
    return out;
}

inline std::string suffix_cps(const std::vector<char32_t>& cps, std::size_t n) {
    std::string out;
    const std::size_t k = std::min(n, cps.size());
    for (std::size_t i = cps.size() - k; i < cps.size(); ++i) utf8::append(out, cps[i]);
    return out;
}

/// Features of position i. There is deliberately no bias feature: a token
/// whose features were never updated keeps the tie-break tag it was trained with.
inline std::vector<std::string> tagger_features(const std::vector<std::string>& words,
                                                const std::vector<bool>& capitalized,
                                                std::size_t i, const std::string& prev_tag) {
    const std::string& w = words[i];
    const auto cps = utf8::code_points(w);
    std::vector<std::string> f;
    f.reserve(12);
    f.push_back("w=" + w);
    for (std::size_t n = 1; n <= 3; ++n) {
        if (cps.size() >= n) {
            f.push_back("p" + std::to_string(n) + "=" + prefix_cps(cps, n));
            f.push_back("s" + std::to_string(n) + "=" + suffix_cps(cps, n));
        }
    }
    f.push_back("w-1=" + (i > 0 ? words[i - 1] : std::string("<s>")));
    f.push_back("w+1=" + (i + 1 < words.size() ? words[i + 1] : std::string("</s>")));
    f.push_back("t-1=" + prev_tag);
    f.push_back("t-1,w=" + prev_tag + "|" + w);
    if (capitalized[i]) f.push_back(i == 0 ? "cap-initial" : "cap-inner");
    return f;
}

inline std::size_t best_tag(const std::unordered_map<std::string, std::vector<double>>& weights,
                            const std::vector<std::string>& features, std::size_t n_tags) {
    std::vector<double> scores(n_tags, 0.0);
    for (const auto& feat : features) {
        auto it = weights.find(feat);
        if (it == weights.end()) continue;
        for (std::size_t t = 0; t < n_tags; ++t) scores[t] += it->second[t];
    }
    std::size_t best = 0;
    for (std::size_t t = 1; t < n_tags; ++t) {
        if (scores[t] > scores[best]) best = t;
    }
    return best;
}

inline bool starts_upper(std::string_view s) {
    if (s.empty()) return false;
    std::size_t pos = 0;
    return utf8::is_upper(utf8::decode(s, pos));
}

/// Shared greedy decoder. `fixed[i]` holds a tag that bypasses scoring.
template <typename Lookup>
std::vector<std::string> decode_greedy(const TaggerModel& model,
                                       const std::vector<std::string>& words,
                                       const std::vector<bool>& capitalized, Lookup fixed) {
    std::vector<std::string> tags(words.size());
    std::string prev = "<S>";
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (const std::string* tag = fixed(i)) {
            tags[i] = *tag;
        } else {
            const auto feats = tagger_features(words, capitalized, i, prev);
            tags[i] = model.tagset[best_tag(model.weights, feats, model.tagset.size())];
        }
        prev = tags[i];
    }
    return tags;
}

}  // namespace detail

/// Reads CoNLL-U, keeping FORM (column 2) and UPOS (column 4). Multiword
/// ranges and empty nodes are skipped.
inline std::vector<TaggedSentence> read_conllu(std::istream& in, const std::string& origin = "<stream>") {
    std::vector<TaggedSentence> sentences;
    TaggedSentence current;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (is_blank(line)) {
            if (!current.empty()) sentences.push_back(std::move(current));
            current.clear();
            continue;
        }
        if (line[0] == '#') continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, '\t')) cols.push_back(col);
        if (cols.size() < 4) {
            throw DataError(origin + ":" + std::to_string(lineno) + ": expected at least 4 tab-separated columns");
        }
        if (cols[0].find_first_of("-.") != std::string::npos) continue;
        if (cols[1].empty() || cols[3].empty() || cols[3] == "_") {
            throw DataError(origin + ":" + std::to_string(lineno) + ": empty FORM or UPOS");
        }
        if (!utf8::is_valid(cols[1])) throw DataError(origin + ":" + std::to_string(lineno) + ": invalid UTF-8");
        current.emplace_back(cols[1], cols[3]);
    }
    if (!current.empty()) sentences.push_back(std::move(current));
    return sentences;
}

inline std::vector<TaggedSentence> read_conllu(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path);
    return read_conllu(in, path);
}

inline TaggerModel train_tagger(const std::vector<TaggedSentence>& sentences, int epochs, std::uint64_t seed) {
    if (sentences.empty()) throw DataError("no training sentences for the tagger");
    if (epochs < 1) throw UsageError("tagger epochs must be >= 1");

    struct Prepared {
        std::vector<std::string> words;
        std::vector<bool> capitalized;
        std::vector<bool> punct;
        std::vector<std::string> gold;
    };
    std::vector<Prepared> data;
    std::set<std::string> tags;
    std::map<std::string, std::map<std::string, std::size_t>> word_tags;
    for (const auto& s : sentences) {
        Prepared p;
        for (const auto& [form, tag] : s) {
            if (tag.empty()) throw DataError("empty tag in tagger training data");
            p.words.push_back(case_fold(form));
            p.capitalized.push_back(detail::starts_upper(form));
            const bool punct = detail::is_punct_form(form);
            p.punct.push_back(punct);
            p.gold.push_back(tag);
            if (!punct) {
                tags.insert(tag);
                ++word_tags[p.words.back()][tag];
            }
        }
        data.push_back(std::move(p));
    }
    if (tags.empty()) throw DataError("tagger training data contains no word tokens");

    TaggerModel model;
    model.tagset.assign(tags.begin(), tags.end());
    const std::size_t n_tags = model.tagset.size();
    std::map<std::string, std::size_t> tag_index;
    for (std::size_t t = 0; t < n_tags; ++t) tag_index[model.tagset[t]] = t;

    for (const auto& [word, dist] : word_tags) {
        std::size_t total = 0, top = 0;
        std::string top_tag;
        for (const auto& [tag, c] : dist) {
            total += c;
            if (c > top) {
                top = c;
                top_tag = tag;
            }
        }
        if (total >= 5 && static_cast<double>(top) / static_cast<double>(total) >= 0.97) {
            model.lexicon[word] = top_tag;
        }
    }

    // Averaged weights follow the per-instance average of the weight vector:
    // a weight contributes for every instance processed while it held a value.
    struct Cell {
        std::vector<double> w, total;
        std::vector<std::uint64_t> stamp;
    };
    std::unordered_map<std::string, Cell> cells;
    std::uint64_t clock = 0;
    auto bump = [&](const std::string& feat, std::size_t t, double delta) {
        auto [it, inserted] = cells.try_emplace(feat);
        Cell& c = it->second;
        if (inserted) {
            c.w.assign(n_tags, 0.0);
            c.total.assign(n_tags, 0.0);
            c.stamp.assign(n_tags, 0);
        }
        c.total[t] += static_cast<double>(clock - c.stamp[t]) * c.w[t];
        c.stamp[t] = clock;
        c.w[t] += delta;
    };

    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    std::unordered_map<std::string, std::vector<double>> live;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        shuffle(order, rng);
        for (std::size_t si : order) {
            const Prepared& p = data[si];
            std::string prev = "<S>";
            for (std::size_t i = 0; i < p.words.size(); ++i) {
                if (p.punct[i]) {
                    prev = kPunctTag;
                    continue;
                }
                auto lex = model.lexicon.find(p.words[i]);
                if (lex != model.lexicon.end()) {
                    prev = lex->second;
                    continue;
                }
                ++clock;
                const auto feats = detail::tagger_features(p.words, p.capitalized, i, prev);
                const std::size_t guess = detail::best_tag(live, feats, n_tags);
                const std::size_t truth = tag_index.at(p.gold[i]);
                if (guess != truth) {
                    for (const auto& f : feats) {
                        bump(f, truth, 1.0);
                        bump(f, guess, -1.0);
                        live[f] = cells[f].w;
                    }
                }
                prev = model.tagset[guess];
            }
        }
    }

    for (auto& [feat, c] : cells) {
        std::vector<double> avg(n_tags, 0.0);
        bool nonzero = false;
        for (std::size_t t = 0; t < n_tags; ++t) {
            const double total = c.total[t] + static_cast<double>(clock - c.stamp[t] + 1) * c.w[t];
            avg[t] = clock > 0 ? total / static_cast<double>(clock) : 0.0;
            nonzero = nonzero || avg[t] != 0.0;
        }
        if (nonzero) model.weights.emplace(feat, std::move(avg));
    }
    return model;
}

/// One tag per token; punctuation tokens always receive PUNCT.
inline std::vector<TaggedToken> tag(const TaggerModel& model, const std::vector<Token>& tokens) {
    std::vector<std::string> words;
    std::vector<bool> capitalized;
    words.reserve(tokens.size());
    for (const auto& t : tokens) {
        words.push_back(t.normalized);
        capitalized.push_back(detail::starts_upper(t.surface));
    }
    const auto tags = detail::decode_greedy(model, words, capitalized, [&](std::size_t i) -> const std::string* {
        if (tokens[i].is_punct) return &kPunctTag;
        auto it = model.lexicon.find(words[i]);
        return it == model.lexicon.end() ? nullptr : &it->second;
    });
    std::vector<TaggedToken> out;
    out.reserve(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) out.push_back({tokens[i], tags[i]});
    return out;
}

inline std::vector<std::string> tag_sequence(const TaggerModel& model, const std::vector<Token>& tokens) {
    std::vector<std::string> out;
    for (auto& t : tag(model, tokens)) out.push_back(std::move(t.pos));
    return out;
}

/// Tags a CoNLL-U style form sequence (used for accuracy measurements).
inline std::vector<std::string> tag_forms(const TaggerModel& model, const std::vector<std::string>& forms) {
    std::vector<std::string> words;
    std::vector<bool> capitalized;
    std::vector<bool> punct;
    for (const auto& f : forms) {
        words.push_back(case_fold(f));
        capitalized.push_back(detail::starts_upper(f));
        punct.push_back(detail::is_punct_form(f));
    }
    return detail::decode_greedy(model, words, capitalized, [&](std::size_t i) -> const std::string* {
        if (punct[i]) return &kPunctTag;
        auto it = model.lexicon.find(words[i]);
        return it == model.lexicon.end() ? nullptr : &it->second;
    });
}

// ---------------------------------------------------------------------------
// Persistence. Line format (tab separated):
//   MIRTH-TAGGER v1
//   tagset  TAG...
//   lexicon WORD TAG
//   weight  FEATURE TAG VALUE
//   end     RECORD_COUNT

inline constexpr const char* kTaggerHeader = "MIRTH-TAGGER v1";

inline void save_tagger(const TaggerModel& model, std::ostream& out) {
    out << kTaggerHeader << '\n';
    out << "tagset";
    for (const auto& t : model.tagset) out << '\t' << t;
    out << '\n';
    std::size_t records = 1;
    for (const auto& [word, tag] : model.lexicon) {
        out << "lexicon\t" << word << '\t' << tag << '\n';
        ++records;
    }
    std::vector<const std::string*> feats;
    for (const auto& [f, w] : model.weights) feats.push_back(&f);
    std::sort(feats.begin(), feats.end(), [](auto* a, auto* b) { return *a < *b; });
    out << std::setprecision(17);
    for (const auto* f : feats) {
        const auto& w = model.weights.at(*f);
        for (std::size_t t = 0; t < model.tagset.size(); ++t) {
            if (w[t] == 0.0) continue;
            out << "weight\t" << *f << '\t' << model.tagset[t] << '\t' << w[t] << '\n';
            ++records;
        }
    }
    out << "end\t" << records << '\n';
}

inline void save_tagger(const TaggerModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    save_tagger(model, out);
    if (!out) throw DataError("failed writing " + path);
}

inline TaggerModel load_tagger(std::istream& in, const std::string& origin = "<stream>") {
    auto fail = [&](std::size_t lineno, const std::string& what) {
        throw DataError(origin + ":" + std::to_string(lineno) + ": " + what);
    };
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line) || line != kTaggerHeader) fail(1, "missing header '" + std::string(kTaggerHeader) + "'");
    ++lineno;

    TaggerModel model;
    std::map<std::string, std::size_t> tag_index;
    std::size_t records = 0;
    bool have_tagset = false, ended = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (ended) fail(lineno, "record after end marker");
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, '\t')) cols.push_back(col);
        if (cols.empty()) fail(lineno, "empty record");
        const std::string& kind = cols[0];
        if (kind == "tagset") {
            if (have_tagset) fail(lineno, "duplicate tagset record");
            if (cols.size() < 2) fail(lineno, "empty tagset");
            model.tagset.assign(cols.begin() + 1, cols.end());
            if (!std::is_sorted(model.tagset.begin(), model.tagset.end())) fail(lineno, "tagset not sorted");
            for (std::size_t t = 0; t < model.tagset.size(); ++t) tag_index[model.tagset[t]] = t;
            have_tagset = true;
            ++records;
        } else if (kind == "lexicon") {
            if (!have_tagset) fail(lineno, "lexicon record before tagset");
            if (cols.size() != 3) fail(lineno, "lexicon record needs 3 fields");
            if (!tag_index.count(cols[2])) fail(lineno, "lexicon tag '" + cols[2] + "' not in tagset");
            model.lexicon[cols[1]] = cols[2];
            ++records;
        } else if (kind == "weight") {
            if (!have_tagset) fail(lineno, "weight record before tagset");
            if (cols.size() != 4) fail(lineno, "weight record needs 4 fields");
            auto ti = tag_index.find(cols[2]);
            if (ti == tag_index.end()) fail(lineno, "weight tag '" + cols[2] + "' not in tagset");
            double value = 0.0;
            try {
                std::size_t used = 0;
                value = std::stod(cols[3], &used);
                if (used != cols[3].size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                fail(lineno, "malformed weight value '" + cols[3] + "'");
            }
            if (!std::isfinite(value)) fail(lineno, "non-finite weight");
            auto& w = model.weights[cols[1]];
            if (w.empty()) w.assign(model.tagset.size(), 0.0);
            w[ti->second] = value;
            ++records;
        } else if (kind == "end") {
            if (cols.size() != 2 || cols[1] != std::to_string(records)) {
                fail(lineno, "end marker does not match record count " + std::to_string(records));
            }
            ended = true;
        } else {
            fail(lineno, "unknown record kind '" + kind + "'");
        }
    }
    if (!have_tagset) fail(lineno, "missing tagset record");
    if (!ended) fail(lineno, "truncated file: missing end marker");
    return model;
}

inline TaggerModel load_tagger(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path);
    return load_tagger(in, path);
}

}  // namespace mirth
