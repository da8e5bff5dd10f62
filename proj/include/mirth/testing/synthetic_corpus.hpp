#pragma once

// Deterministic stand-in corpora for tests, demos and the acceptance run:
// template-generated Dutch-like jokes, news headlines and proverbs, a
// gold-tagged CoNLL-U corpus from the same grammar, and word vectors trained
// distributionally (PPMI + random projection) on a separate unlabeled sample.
//
// Jokes pick a topic and draw most content words from it, so a joke is
// topically coherent; headlines and proverbs use their own templates and
// largely disjoint vocabularies.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "mirth/random.hpp"
#include "mirth/text.hpp"

namespace mirth::synth {

struct SyntheticOptions {
    std::uint64_t seed = 2020;
    int joke_topics = 120;
    int news_topics = 40;
    double topic_coherence = 0.6;  // chance a content slot draws from the joke's topic
};

struct TaggedItem {
    std::string form;
    std::string tag;
};

using TaggedText = std::vector<TaggedItem>;

class SyntheticCorpus {
public:
    explicit SyntheticCorpus(SyntheticOptions opt = {}) : opt_(opt), rng_(derive_seed(opt.seed, "lexicon")) {
        build_lexicon();
    }

    std::vector<std::string> jokes(std::size_t n, std::uint64_t seed) const {
        return render_all(n, seed, Domain::Joke);
    }
    std::vector<std::string> news(std::size_t n, std::uint64_t seed) const {
        return render_all(n, seed, Domain::News);
    }
    std::vector<std::string> proverbs(std::size_t n, std::uint64_t seed) const {
        return render_all(n, seed, Domain::Proverb);
    }

    /// Gold-tagged sentences mixing all three domains.
    std::vector<TaggedText> tagged(std::size_t n, std::uint64_t seed) const {
        Rng rng(derive_seed(seed, "tagged"));
        std::vector<TaggedText> out;
        for (std::size_t i = 0; i < n; ++i) {
            const auto d = static_cast<Domain>(uniform_index(rng, 3));
            out.push_back(generate(d, rng));
        }
        return out;
    }

    static void write_conllu(const std::vector<TaggedText>& sentences, std::ostream& out) {
        std::size_t sid = 0;
        for (const auto& s : sentences) {
            out << "# sent_id = " << ++sid << "\n# text = " << render(s) << "\n";
            for (std::size_t k = 0; k < s.size(); ++k) {
                out << k + 1 << '\t' << s[k].form << "\t_\t" << s[k].tag << "\t_\t_\t_\t_\t_\t_\n";
            }
            out << '\n';
        }
    }

    /// Word vectors for every normalized token of an unlabeled mixed sample.
    void write_embeddings(std::ostream& out, std::size_t sentences, int dim, std::uint64_t seed) const {
        Rng rng(derive_seed(seed, "embedding-corpus"));
        std::vector<std::vector<std::string>> corpus;
        for (std::size_t i = 0; i < sentences; ++i) {
            const auto d = static_cast<Domain>(uniform_index(rng, 3));
            corpus.push_back(normalized_words(tokenize(render(generate(d, rng)))));
        }
        std::vector<std::string> vocab;
        std::unordered_map<std::string, std::size_t> index;
        for (const auto& s : corpus) {
            for (const auto& w : s) {
                if (index.emplace(w, vocab.size()).second) vocab.push_back(w);
            }
        }
        // Co-occurrence counts in a +-2 window.
        std::vector<std::map<std::size_t, double>> cooc(vocab.size());
        std::vector<double> wc(vocab.size(), 0.0);
        double total = 0.0;
        for (const auto& s : corpus) {
            for (std::size_t i = 0; i < s.size(); ++i) {
                for (std::size_t j = (i >= 2 ? i - 2 : 0); j < std::min(s.size(), i + 3); ++j) {
                    if (i == j) continue;
                    cooc[index[s[i]]][index[s[j]]] += 1.0;
                    wc[index[s[i]]] += 1.0;
                    total += 1.0;
                }
            }
        }
        Rng proj_rng(derive_seed(seed, "projection"));
        std::vector<std::vector<double>> proj(vocab.size(), std::vector<double>(static_cast<std::size_t>(dim)));
        for (auto& row : proj) {
            for (auto& x : row) x = standard_normal(proj_rng);
        }
        out << vocab.size() << ' ' << dim << '\n';
        char buf[32];
        for (std::size_t w = 0; w < vocab.size(); ++w) {
            std::vector<double> v(static_cast<std::size_t>(dim), 0.0);
            for (const auto& [c, n] : cooc[w]) {
                const double pmi = std::log(n * total / (wc[w] * wc[c]));
                if (pmi <= 0.0) continue;
                for (int k = 0; k < dim; ++k) v[k] += pmi * proj[c][k];
            }
            double norm = 0.0;
            for (double x : v) norm += x * x;
            norm = std::sqrt(norm);
            out << vocab[w];
            for (double x : v) {
                std::snprintf(buf, sizeof buf, " %.6f", norm > 0 ? x / norm : 0.0);
                out << buf;
            }
            out << '\n';
        }
    }

    static std::string render(const TaggedText& items) {
        std::string out;
        for (const auto& it : items) {
            const bool attach = it.tag == "PUNCT" && it.form != "\"";
            if (!out.empty() && !attach) out += ' ';
            out += it.form;
        }
        return out;
    }

private:
    enum class Domain { Joke = 0, News = 1, Proverb = 2 };

    struct Topic {
        std::vector<std::string> nouns, verbs, adjs, names;
    };

    std::vector<std::string> render_all(std::size_t n, std::uint64_t seed, Domain d) const {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(d) + 100));
        std::vector<std::string> out;
        std::unordered_set<std::string> seen;
        std::size_t guard = 0;
        while (out.size() < n && guard < n * 50) {
            ++guard;
            auto text = render(generate(d, rng));
            if (seen.insert(text).second) out.push_back(std::move(text));
        }
        return out;
    }

    std::string syllable(Rng& rng) {
        static const char* onsets[] = {"b", "d", "f", "g", "h", "k", "l", "m", "n", "p", "r", "s", "t", "v",
                                       "w", "z", "br", "dr", "gr", "kr", "pr", "tr", "bl", "fl", "gl", "kl",
                                       "pl", "sl", "sn", "sp", "st", "sch", "str", "j"};
        static const char* vowels[] = {"a", "e", "i", "o", "u", "aa", "ee", "oo", "uu", "ie", "oe", "ou", "ei",
                                       "ij", "eu", "ui"};
        static const char* codas[] = {"", "", "n", "l", "r", "s", "t", "k", "m", "p", "rt", "nk", "ld", "nd", "st"};
        return std::string(onsets[uniform_index(rng, std::size(onsets))]) + vowels[uniform_index(rng, std::size(vowels))] +
               codas[uniform_index(rng, std::size(codas))];
    }

    std::string fresh(const std::vector<const char*>& suffixes, int max_syllables) {
        for (;;) {
            std::string w;
            const int n = 1 + static_cast<int>(uniform_index(rng_, static_cast<std::size_t>(max_syllables)));
            for (int k = 0; k < n; ++k) w += syllable(rng_);
            w += suffixes[uniform_index(rng_, suffixes.size())];
            if (w.size() >= 3 && used_.insert(w).second) return w;
        }
    }

    std::string fresh_name() {
        std::string w = fresh({"o", "a", "us", "ie", "", "en"}, 2);
        w[0] = static_cast<char>(w[0] - 32);
        return w;
    }

    Topic make_topic(int nouns, int verbs, int adjs, int names) {
        Topic t;
        for (int i = 0; i < nouns; ++i) t.nouns.push_back(fresh({"", "", "", "er", "ing", "heid", "je", "el"}, 2));
        for (int i = 0; i < verbs; ++i) t.verbs.push_back(fresh({"t", "t", "t", "eert"}, 2));
        for (int i = 0; i < adjs; ++i) t.adjs.push_back(fresh({"ig", "lijk", "isch", "", "e"}, 2));
        for (int i = 0; i < names; ++i) t.names.push_back(fresh_name());
        return t;
    }

    void build_lexicon() {
        for (const char* w : {"de", "het", "een", "is", "en", "aan", "op", "in", "met", "van", "wat", "wie", "hoe",
                              "waarom", "zegt", "omdat", "hij", "zij", "ik", "je", "niet", "ook", "nog", "heet",
                              "broer", "meester", "jantje", "ene", "andere", "tegen", "komt", "bij", "vraagt",
                              "nee", "alleen", "kabinet", "minister", "gemeente", "procent", "meer", "na", "door",
                              "voor", "wil", "wie", "die", "dat", "zo", "geen", "te", "er", "twee", "dokter",
                              "zit", "loopt", "een", "verschil", "tussen", "kan", "doet", "over", "straks"}) {
            used_.insert(w);
        }
        for (int t = 0; t < opt_.joke_topics; ++t) joke_topics_.push_back(make_topic(40, 24, 16, 6));
        for (int t = 0; t < opt_.news_topics; ++t) news_topics_.push_back(make_topic(30, 16, 12, 8));
        joke_general_ = make_topic(80, 40, 30, 20);
        proverb_words_ = make_topic(60, 30, 20, 0);
    }

    /// Zipf-weighted choice (weight 1 / (rank + 1)).
    static const std::string& zipf(const std::vector<std::string>& xs, Rng& rng) {
        double total = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) total += 1.0 / static_cast<double>(i + 1);
        double u = uniform01(rng) * total;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            u -= 1.0 / static_cast<double>(i + 1);
            if (u < 0.0) return xs[i];
        }
        return xs.back();
    }

    const std::vector<std::string>& slot_pool(const Topic& t, const std::string& tag) const {
        if (tag == "NOUN") return t.nouns;
        if (tag == "VERB") return t.verbs;
        if (tag == "ADJ") return t.adjs;
        return t.names;
    }

    static const std::vector<std::string>& templates(Domain d) {
        static const std::vector<std::string> joke = {
            "Wat/PRON is/AUX {ADJ} en/CCONJ {VERB} aan/ADP de/DET {NOUN}?/PUNCT {PROPN} de/DET {NOUN}!/PUNCT",
            "Wat/PRON zegt/VERB de/DET ene/ADJ {NOUN#1} tegen/ADP de/DET andere/ADJ {NOUN#1}?/PUNCT {ADJ} {NOUN}!/PUNCT",
            "{PROPN#1} komt/VERB bij/ADP de/DET dokter/NOUN./PUNCT Zegt/VERB de/DET dokter/NOUN:/PUNCT {PROPN#1},/PUNCT je/PRON {VERB} te/ADV {ADJ}!/PUNCT",
            "Waarom/ADV {VERB} de/DET {NOUN} op/ADP de/DET {NOUN}?/PUNCT Omdat/SCONJ hij/PRON {ADJ} is/AUX!/PUNCT",
            "Hoe/ADV heet/VERB de/DET broer/NOUN van/ADP {PROPN#1} {PROPN#2}?/PUNCT {PROPN#1} {PROPN#3}!/PUNCT",
            "Jantje/PROPN vraagt/VERB aan/ADP de/DET meester/NOUN:/PUNCT {VERB} een/DET {NOUN} ook/ADV {ADJ}?/PUNCT Nee/INTJ Jantje/PROPN,/PUNCT alleen/ADV een/DET {ADJ} {NOUN}!/PUNCT",
            "Wat/PRON is/AUX het/DET verschil/NOUN tussen/ADP een/DET {NOUN} en/CCONJ een/DET {NOUN}?/PUNCT Een/DET {NOUN} {VERB} niet/ADV!/PUNCT",
            "Twee/NUM {NOUN} zitten/VERB in/ADP een/DET {NOUN}./PUNCT Zegt/VERB de/DET ene/ADJ:/PUNCT ik/PRON {VERB}!/PUNCT Zegt/VERB de/DET andere/ADJ:/PUNCT ik/PRON ook/ADV!/PUNCT",
            "Wie/PRON {VERB} er/ADV in/ADP de/DET {NOUN}?/PUNCT Een/DET {ADJ} {NOUN}!/PUNCT",
            "Wat/PRON doet/VERB een/DET {NOUN} in/ADP de/DET {NOUN}?/PUNCT {VERB} met/ADP een/DET {NOUN}!/PUNCT",
            "{PROPN} loopt/VERB met/ADP een/DET {NOUN} over/ADP straat/NOUN./PUNCT Vraagt/VERB de/DET {NOUN}:/PUNCT Waarom/ADV {VERB} je/PRON zo/ADV {ADJ}?/PUNCT",
            "Wat/PRON is/AUX {ADJ},/PUNCT {ADJ} en/CCONJ {VERB} in/ADP een/DET {NOUN}?/PUNCT Een/DET {NOUN} met/ADP een/DET {NOUN}!/PUNCT",
        };
        static const std::vector<std::string> news = {
            "{PROPN} {VERB} {NUM} procent/NOUN meer/ADV {NOUN} in/ADP {PROPN}",
            "Kabinet/NOUN wil/AUX {ADJ} {NOUN} voor/ADP {NOUN}",
            "{NOUN} in/ADP {PROPN} {VERB} na/ADP {ADJ} {NOUN}",
            "Minister/NOUN {PROPN} {VERB} {NOUN} door/ADP {NOUN}",
            "Gemeente/NOUN {PROPN} {VERB} {NUM} {NOUN}",
            "{ADJ} {NOUN} {VERB} {NOUN} van/ADP {PROPN}",
            "{NUM} {NOUN} {VERB} bij/ADP {NOUN} in/ADP {PROPN}",
            "{PROPN} {VERB} geen/DET {NOUN} meer/ADV na/ADP {NOUN}",
            "Meer/ADV {NOUN} voor/ADP {ADJ} {NOUN}",
            "{NOUN} {PROPN}:/PUNCT {NOUN} {VERB} {ADJ}",
        };
        static const std::vector<std::string> proverb = {
            "Wie/PRON {VERB},/PUNCT {VERB} ook/ADV",
            "Een/DET {ADJ} {NOUN} {VERB} niet/ADV",
            "Beter/ADJ een/DET {NOUN} in/ADP de/DET {NOUN} dan/SCONJ tien/NUM in/ADP de/DET {NOUN}",
            "Zo/ADV {ADJ} als/ADP een/DET {NOUN}",
            "De/DET {NOUN} {VERB} niet/ADV ver/ADV van/ADP de/DET {NOUN}",
            "Geen/DET {NOUN} zonder/ADP {NOUN}",
            "Wie/PRON het/DET {ADJ} {NOUN} {VERB},/PUNCT {VERB} de/DET {NOUN}",
            "Als/SCONJ de/DET {NOUN} {VERB},/PUNCT {VERB} de/DET {NOUN}",
        };
        switch (d) {
            case Domain::Joke: return joke;
            case Domain::News: return news;
            case Domain::Proverb: return proverb;
        }
        return joke;
    }

    TaggedText generate(Domain d, Rng& rng) const {
        const auto& tpls = templates(d);
        const std::string& tpl = tpls[uniform_index(rng, tpls.size())];
        const Topic* topic = nullptr;
        if (d == Domain::Joke) topic = &joke_topics_[uniform_index(rng, joke_topics_.size())];
        if (d == Domain::News) topic = &news_topics_[uniform_index(rng, news_topics_.size())];

        auto draw = [&](const std::string& tag) -> std::string {
            if (tag == "NUM") return std::to_string(2 + uniform_index(rng, 98));
            if (d == Domain::Proverb) return zipf(slot_pool(proverb_words_, tag), rng);
            if (d == Domain::Joke && uniform01(rng) >= opt_.topic_coherence) {
                return zipf(slot_pool(joke_general_, tag), rng);
            }
            return zipf(slot_pool(*topic, tag), rng);
        };

        TaggedText out;
        std::map<std::string, std::string> bound;
        std::istringstream ss(tpl);
        std::string piece;
        while (ss >> piece) {
            // A piece is a run of units, each "{TAG}", "{TAG#k}" or "form/TAG".
            std::size_t at = 0;
            while (at < piece.size()) {
                if (piece[at] == '{') {
                    const auto close = piece.find('}', at);
                    const std::string slot = piece.substr(at + 1, close - at - 1);
                    const std::string tag = slot.substr(0, slot.find('#'));
                    std::string word;
                    if (slot.find('#') != std::string::npos) {
                        auto it = bound.find(slot);
                        word = it != bound.end() ? it->second : (bound[slot] = draw(tag));
                    } else {
                        word = draw(tag);
                    }
                    out.push_back({word, tag});
                    at = close + 1;
                    continue;
                }
                const auto slash = piece.find('/', at);
                std::size_t tag_end = slash + 1;
                while (tag_end < piece.size() && piece[tag_end] >= 'A' && piece[tag_end] <= 'Z') ++tag_end;
                out.push_back({piece.substr(at, slash - at), piece.substr(slash + 1, tag_end - slash - 1)});
                at = tag_end;
            }
        }
        bool sentence_start = true;
        for (auto& it : out) {
            if (it.tag == "PUNCT") {
                sentence_start = it.form == "." || it.form == "?" || it.form == "!" || it.form == ":";
                continue;
            }
            if (sentence_start && it.form[0] >= 'a' && it.form[0] <= 'z') it.form[0] = static_cast<char>(it.form[0] - 32);
            sentence_start = false;
        }
        return out;
    }

    SyntheticOptions opt_;
    Rng rng_;
    std::unordered_set<std::string> used_;
    std::vector<Topic> joke_topics_;
    std::vector<Topic> news_topics_;
    Topic joke_general_;
    Topic proverb_words_;
};

}  // namespace mirth::synth
