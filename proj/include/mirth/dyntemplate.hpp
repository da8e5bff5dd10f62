#pragma once

// Dynamic-template negative generation: rare words of a joke become slots that
// are refilled with part-of-speech matching words taken from a few other
// randomly sampled jokes.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mirth/error.hpp"
#include "mirth/random.hpp"
#include "mirth/tagger.hpp"
#include "mirth/text.hpp"

namespace mirth {

struct DTParams {
    double max_freq_percentile = 0.62;
    int chars_per_replacement = 25;
    int context_sample_size = 3;
    int max_context_resamples = 5;
    std::uint64_t rng_seed = 1;

    void validate() const {
        if (!(max_freq_percentile > 0.0 && max_freq_percentile <= 1.0)) {
            throw UsageError("max_freq_percentile must lie in (0, 1]");
        }
        if (chars_per_replacement < 1) throw UsageError("chars_per_replacement must be >= 1");
        if (context_sample_size < 1) throw UsageError("context_sample_size must be >= 1");
        if (max_context_resamples < 0) throw UsageError("max_context_resamples must be >= 0");
    }
};

struct Slot {
    std::string word;  // normalized
    std::string pos;
    std::vector<std::size_t> positions;
};

struct ReplacementRecord {
    std::string original_word;     // normalized
    std::string replacement_word;  // normalized
    std::string pos;
    std::vector<std::size_t> positions;
};

struct NegativeExample {
    std::string source_id;
    std::string text;
    std::vector<ReplacementRecord> replacements;
    bool degenerate = false;
};

/// Words of the sampled context jokes grouped by tag; duplicates kept so
/// frequent words are drawn proportionally more often.
using ContextPool = std::map<std::string, std::vector<std::string>>;

/// Number of code points, the unit of the characters-per-replacement rule.
inline std::size_t char_length(std::string_view text) {
    std::size_t n = 0, pos = 0;
    while (pos < text.size()) {
        utf8::decode(text, pos);
        ++n;
    }
    return n;
}

inline std::size_t min_replacements(std::string_view raw_text, const DTParams& params) {
    return std::max<std::size_t>(1, char_length(raw_text) / static_cast<std::size_t>(params.chars_per_replacement));
}

/// Every distinct word at or below the frequency threshold, rarest first
/// (ties in seeded random order).
inline std::vector<Slot> rank_slots(const std::vector<TaggedToken>& tagged_joke, const FrequencyTable& table,
                                    const DTParams& params, Rng& rng) {
    const std::uint64_t threshold = frequency_percentile_threshold(table, params.max_freq_percentile);
    std::vector<Slot> candidates;
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < tagged_joke.size(); ++i) {
        const Token& t = tagged_joke[i].token;
        if (!t.is_word) continue;
        auto it = index.find(t.normalized);
        if (it != index.end()) {
            candidates[it->second].positions.push_back(i);
            continue;
        }
        index.emplace(t.normalized, candidates.size());
        candidates.push_back({t.normalized, tagged_joke[i].pos, {i}});
    }
    std::erase_if(candidates, [&](const Slot& s) { return table.count(s.word) > threshold; });
    shuffle(candidates, rng);
    std::stable_sort(candidates.begin(), candidates.end(), [&](const Slot& a, const Slot& b) {
        return table.count(a.word) < table.count(b.word);
    });
    return candidates;
}

/// The min_replacements rarest eligible words of the joke.
inline std::vector<Slot> select_slots(const std::vector<TaggedToken>& tagged_joke, std::string_view raw_text,
                                      const FrequencyTable& table, const DTParams& params, Rng& rng) {
    auto candidates = rank_slots(tagged_joke, table, params, rng);
    const std::size_t k = min_replacements(raw_text, params);
    if (candidates.size() > k) candidates.resize(k);
    return candidates;
}

inline ContextPool pool_from_documents(const std::vector<const Document*>& docs, const TaggerModel& tagger) {
    ContextPool pool;
    for (const Document* d : docs) {
        for (const auto& tt : tag(tagger, d->tokens)) {
            if (tt.token.is_word) pool[tt.pos].push_back(tt.token.normalized);
        }
    }
    return pool;
}

/// Samples `context_sample_size` jokes other than `exclude_id`. Each candidate
/// is ranked by a hash of its id under a fresh draw from `rng`, so the sample
/// does not depend on corpus order.
inline ContextPool build_context_pool(const std::vector<Document>& corpus, const DTParams& params,
                                      const std::string& exclude_id, const TaggerModel& tagger, Rng& rng) {
    const std::uint64_t draw = rng();
    std::vector<std::pair<std::uint64_t, const Document*>> ranked;
    ranked.reserve(corpus.size());
    for (const auto& d : corpus) {
        if (d.id != exclude_id) ranked.emplace_back(derive_seed(draw, d.id), &d);
    }
    const auto k = static_cast<std::size_t>(params.context_sample_size);
    if (ranked.size() < k) {
        throw DataError("corpus too small for a context sample of " + std::to_string(k) + " jokes");
    }
    auto before = [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first < b.first : a.second->id < b.second->id;
    };
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end(), before);
    std::vector<const Document*> chosen;
    for (std::size_t j = 0; j < k; ++j) chosen.push_back(ranked[j].second);
    return pool_from_documents(chosen, tagger);
}

/// Applies the casing pattern of `displaced` (all caps, initial capital or
/// lowercase) to the normalized replacement.
inline std::string transfer_casing(std::string_view displaced, std::string_view replacement) {
    const auto src = utf8::code_points(displaced);
    std::size_t letters = 0, upper = 0;
    for (char32_t c : src) {
        if (utf8::is_upper(c) || utf8::is_lower(c)) {
            ++letters;
            if (utf8::is_upper(c)) ++upper;
        }
    }
    const bool all_caps = letters > 1 && upper == letters;
    const bool initial = !src.empty() && utf8::is_upper(src.front());
    std::string out;
    bool first = true;
    for (char32_t c : utf8::code_points(replacement)) {
        if (all_caps || (initial && first)) c = utf8::to_upper(c);
        first = false;
        utf8::append(out, c);
    }
    return out;
}

namespace detail {

inline std::optional<std::string> draw_replacement(const ContextPool& pool, const Slot& slot, Rng& rng) {
    auto it = pool.find(slot.pos);
    if (it == pool.end()) return std::nullopt;
    std::vector<const std::string*> options;
    for (const auto& w : it->second) {
        if (w != slot.word) options.push_back(&w);
    }
    if (options.empty()) return std::nullopt;
    return *options[uniform_index(rng, options.size())];
}

}  // namespace detail

/// Fills slots in order from `pool` until `wanted` replacements are made,
/// drawing a fresh pool through `resample` when the current one has no usable
/// word for a slot's tag. A slot that stays unfilled is skipped.
template <typename Resample>
NegativeExample fill_slots(const Document& joke, const std::vector<Slot>& slots, ContextPool pool,
                           const DTParams& params, Rng& rng, Resample resample,
                           std::size_t wanted = static_cast<std::size_t>(-1)) {
    NegativeExample out;
    out.source_id = joke.id;
    std::vector<Token> tokens = joke.tokens;
    for (const Slot& slot : slots) {
        if (out.replacements.size() >= wanted) break;
        std::optional<std::string> pick = detail::draw_replacement(pool, slot, rng);
        for (int attempt = 0; !pick && attempt < params.max_context_resamples; ++attempt) {
            pool = resample();
            pick = detail::draw_replacement(pool, slot, rng);
        }
        if (!pick) continue;
        for (std::size_t p : slot.positions) {
            tokens[p].surface = transfer_casing(joke.tokens[p].surface, *pick);
            tokens[p].normalized = *pick;
        }
        out.replacements.push_back({slot.word, *pick, slot.pos, slot.positions});
    }
    out.text = detokenize(joke.raw_text, tokens);
    out.degenerate = out.replacements.empty() || case_fold(out.text) == case_fold(joke.raw_text);
    return out;
}

/// Generation with an explicit pool source: `draw_pool()` yields the initial
/// context pool and every resample.
template <typename PoolSource>
NegativeExample generate_negative(const Document& joke, const FrequencyTable& table, const TaggerModel& tagger,
                                  const DTParams& params, Rng& rng, PoolSource&& draw_pool) {
    params.validate();
    const auto tagged = tag(tagger, joke.tokens);
    const auto candidates = rank_slots(tagged, table, params, rng);
    if (candidates.empty()) {
        return fill_slots(joke, candidates, {}, params, rng, [] { return ContextPool{}; });
    }
    return fill_slots(joke, candidates, draw_pool(), params, rng, draw_pool, min_replacements(joke.raw_text, params));
}

inline NegativeExample generate_negative(const Document& joke, const std::vector<Document>& corpus,
                                         const FrequencyTable& table, const TaggerModel& tagger,
                                         const DTParams& params, Rng& rng) {
    return generate_negative(joke, table, tagger, params, rng,
                             [&] { return build_context_pool(corpus, params, joke.id, tagger, rng); });
}

/// Seeded per document from (rng_seed, id), so output does not depend on
/// corpus order or on how documents are spread over threads.
inline NegativeExample generate_negative(const Document& joke, const std::vector<Document>& corpus,
                                         const FrequencyTable& table, const TaggerModel& tagger,
                                         const DTParams& params) {
    Rng rng(derive_seed(params.rng_seed, joke.id));
    return generate_negative(joke, corpus, table, tagger, params, rng);
}

inline std::vector<NegativeExample> generate_negative_corpus(const std::vector<Document>& corpus,
                                                             const TaggerModel& tagger, const DTParams& params,
                                                             unsigned threads = 1) {
    if (corpus.empty()) throw DataError("empty joke corpus");
    params.validate();
    const FrequencyTable table = build_frequency_table(corpus);
    std::vector<NegativeExample> out(corpus.size());
    auto work = [&](std::size_t begin, std::size_t step) {
        for (std::size_t i = begin; i < corpus.size(); i += step) {
            out[i] = generate_negative(corpus[i], corpus, table, tagger, params);
        }
    };
    threads = std::max(1u, threads);
    if (threads == 1) {
        work(0, 1);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    }
    return out;
}

inline double degenerate_fraction(const std::vector<NegativeExample>& negatives) {
    if (negatives.empty()) return 0.0;
    const auto d = std::count_if(negatives.begin(), negatives.end(), [](const auto& n) { return n.degenerate; });
    return static_cast<double>(d) / static_cast<double>(negatives.size());
}

// ---------------------------------------------------------------------------
// JSONL

inline nlohmann::json to_json(const NegativeExample& n) {
    nlohmann::json reps = nlohmann::json::array();
    for (const auto& r : n.replacements) {
        reps.push_back({{"original", r.original_word},
                        {"replacement", r.replacement_word},
                        {"pos", r.pos},
                        {"positions", r.positions}});
    }
    return {{"source_id", n.source_id}, {"text", n.text}, {"replacements", reps}, {"degenerate", n.degenerate}};
}

inline NegativeExample negative_from_json(const nlohmann::json& j) {
    NegativeExample n;
    n.source_id = j.at("source_id").get<std::string>();
    n.text = j.at("text").get<std::string>();
    n.degenerate = j.at("degenerate").get<bool>();
    for (const auto& r : j.at("replacements")) {
        n.replacements.push_back({r.at("original").get<std::string>(), r.at("replacement").get<std::string>(),
                                  r.at("pos").get<std::string>(),
                                  r.at("positions").get<std::vector<std::size_t>>()});
    }
    return n;
}

inline void write_negatives_jsonl(const std::vector<NegativeExample>& negatives, std::ostream& out) {
    for (const auto& n : negatives) out << to_json(n).dump() << '\n';
}

inline std::vector<NegativeExample> read_negatives_jsonl(std::istream& in, const std::string& origin = "<stream>") {
    std::vector<NegativeExample> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (is_blank(line)) continue;
        try {
            out.push_back(negative_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw DataError(origin + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace mirth
