#pragma once

// Benchmark assembly: single-text (joke vs non-joke) and pairwise datasets,
// stratified seeded splits and the JSONL exchange format.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mirth/dyntemplate.hpp"
#include "mirth/error.hpp"
#include "mirth/random.hpp"
#include "mirth/text.hpp"

namespace mirth {

using ordered_json = nlohmann::ordered_json;

enum class Label { NonJoke = 0, Joke = 1 };
enum class Side { B = 0, A = 1 };

inline const char* to_string(Label l) { return l == Label::Joke ? "joke" : "nonjoke"; }
inline const char* to_string(Side s) { return s == Side::A ? "a" : "b"; }

inline const std::set<std::string>& known_sources() {
    static const std::set<std::string> s{"jokes", "news", "proverbs", "dyntemplate"};
    return s;
}

struct LabeledExample {
    std::string id;
    std::string text;
    Label label = Label::NonJoke;
    std::string source;

    bool operator==(const LabeledExample&) const = default;
};

struct PairExample {
    std::string id;
    std::string text_a;
    std::string text_b;
    Side target = Side::A;

    bool operator==(const PairExample&) const = default;
};

struct Ratios {
    double train = 0.70;
    double valid = 0.15;
    double test = 0.15;

    void validate() const {
        if (train < 0 || valid < 0 || test < 0) throw UsageError("split ratios must be non-negative");
        if (std::abs(train + valid + test - 1.0) > 1e-9) throw UsageError("split ratios must sum to 1");
    }
    bool operator==(const Ratios&) const = default;
};

inline Ratios parse_ratios(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            v.push_back(std::stod(part));
        } catch (const std::exception&) {
            throw UsageError("malformed ratio '" + part + "'");
        }
    }
    if (v.size() != 3) throw UsageError("expected three comma-separated ratios");
    Ratios r{v[0], v[1], v[2]};
    r.validate();
    return r;
}

struct SplitManifest {
    std::string task;  // "single" or "pairwise"
    std::uint64_t seed = 0;
    Ratios ratios;
    ordered_json counts = ordered_json::object();
    std::size_t excluded_degenerate = 0;

    bool operator==(const SplitManifest&) const = default;
};

template <typename Example>
struct DatasetSplit {
    std::vector<Example> train;
    std::vector<Example> validation;
    std::vector<Example> test;
    SplitManifest manifest;

    const std::vector<Example>& split(const std::string& name) const {
        if (name == "train") return train;
        if (name == "valid" || name == "validation") return validation;
        if (name == "test") return test;
        throw UsageError("unknown split '" + name + "' (expected train, valid or test)");
    }
    bool operator==(const DatasetSplit&) const = default;
};

using BinaryDataset = DatasetSplit<LabeledExample>;
using PairDataset = DatasetSplit<PairExample>;

// ---------------------------------------------------------------------------
// Ingestion and sampling

struct IngestResult {
    std::vector<Document> documents;
    std::size_t duplicates_removed = 0;
};

/// Drops repeated texts, keeping the first occurrence.
inline IngestResult deduplicate(std::vector<Document> docs) {
    IngestResult r;
    std::unordered_set<std::string> seen;
    for (auto& d : docs) {
        if (seen.insert(d.raw_text).second) {
            r.documents.push_back(std::move(d));
        } else {
            ++r.duplicates_removed;
        }
    }
    return r;
}

/// Reads a corpus file: "*.jsonl" holds {"id","text"} objects, anything else
/// is one item per line.
inline std::vector<Document> read_corpus(const std::string& path, const std::string& source) {
    if (path.size() >= 6 && path.compare(path.size() - 6, 6, ".jsonl") == 0) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw DataError("cannot read " + path);
        std::vector<Document> docs;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (is_blank(line)) continue;
            try {
                auto j = nlohmann::json::parse(line);
                docs.emplace_back(j.at("id").get<std::string>(), j.at("text").get<std::string>());
            } catch (const nlohmann::json::exception& e) {
                throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
            }
        }
        return docs;
    }
    return read_lines_corpus(path, source);
}

inline IngestResult ingest_corpus(const std::string& path, const std::string& source) {
    return deduplicate(read_corpus(path, source));
}

inline std::vector<Document> sample_uniform(const std::vector<Document>& documents, std::size_t n,
                                            std::uint64_t seed) {
    if (n > documents.size()) {
        throw DataError("cannot sample " + std::to_string(n) + " of " + std::to_string(documents.size()) +
                        " documents");
    }
    Rng rng(derive_seed(seed, "sample"));
    std::vector<Document> out;
    out.reserve(n);
    for (std::size_t i : sample_without_replacement(rng, documents.size(), n)) out.push_back(documents[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Assembly

namespace detail {

struct SplitSizes {
    std::size_t train, valid, test;
};

inline SplitSizes split_sizes(std::size_t n, const Ratios& r) {
    const auto test = static_cast<std::size_t>(std::floor(r.test * static_cast<double>(n) + 1e-9));
    const auto valid = static_cast<std::size_t>(std::floor(r.valid * static_cast<double>(n) + 1e-9));
    return {n - test - valid, valid, test};
}

inline ordered_json source_counts(const std::vector<LabeledExample>& xs) {
    std::map<std::string, std::size_t> c;
    for (const auto& x : xs) ++c[x.source];
    ordered_json j = ordered_json::object();
    for (const auto& [k, v] : c) j[k] = v;
    return j;
}

}  // namespace detail

/// Stratified split; within every split the larger class is downsampled to
/// the size of the smaller one.
inline BinaryDataset assemble_binary(std::vector<LabeledExample> jokes, std::vector<LabeledExample> nonjokes,
                                     const Ratios& ratios, std::uint64_t seed,
                                     std::size_t excluded_degenerate = 0) {
    ratios.validate();
    if (jokes.empty() || nonjokes.empty()) throw DataError("both jokes and non-jokes must be non-empty");
    for (const auto* side : {&jokes, &nonjokes}) {
        for (const auto& x : *side) {
            if (x.text.empty()) throw DataError("example " + x.id + " has empty text");
            if ((x.source == "jokes") != (x.label == Label::Joke)) {
                throw DataError("example " + x.id + ": source '" + x.source + "' inconsistent with label");
            }
        }
    }
    Rng rng(derive_seed(seed, "binary-split"));
    shuffle(jokes, rng);
    shuffle(nonjokes, rng);
    const auto js = detail::split_sizes(jokes.size(), ratios);
    const auto ns = detail::split_sizes(nonjokes.size(), ratios);

    BinaryDataset out;
    ordered_json dropped = ordered_json::object();
    auto take = [&](std::vector<LabeledExample>& dst, std::size_t joff, std::size_t jn, std::size_t noff,
                    std::size_t nn, const char* name) {
        const std::size_t keep = std::min(jn, nn);
        dst.insert(dst.end(), jokes.begin() + joff, jokes.begin() + joff + keep);
        dst.insert(dst.end(), nonjokes.begin() + noff, nonjokes.begin() + noff + keep);
        dropped[name] = (jn - keep) + (nn - keep);
        shuffle(dst, rng);
    };
    take(out.train, 0, js.train, 0, ns.train, "train");
    take(out.validation, js.train, js.valid, ns.train, ns.valid, "valid");
    take(out.test, js.train + js.valid, js.test, ns.train + ns.valid, ns.test, "test");

    auto& m = out.manifest;
    m.task = "single";
    m.seed = seed;
    m.ratios = ratios;
    m.excluded_degenerate = excluded_degenerate;
    m.counts["input"] = {{"jokes", jokes.size()}, {"nonjokes", nonjokes.size()}};
    m.counts["train"] = detail::source_counts(out.train);
    m.counts["valid"] = detail::source_counts(out.validation);
    m.counts["test"] = detail::source_counts(out.test);
    m.counts["balanced_dropped"] = dropped;
    return out;
}

inline std::vector<LabeledExample> as_labeled(const std::vector<Document>& docs, const std::string& source) {
    std::vector<LabeledExample> out;
    out.reserve(docs.size());
    const Label label = source == "jokes" ? Label::Joke : Label::NonJoke;
    for (const auto& d : docs) out.push_back({d.id, d.raw_text, label, source});
    return out;
}

inline BinaryDataset assemble_binary(const std::vector<Document>& jokes, const std::vector<Document>& nonjokes,
                                     const std::string& nonjoke_source, const Ratios& ratios, std::uint64_t seed) {
    if (nonjoke_source == "jokes") throw UsageError("non-joke source cannot be 'jokes'");
    return assemble_binary(as_labeled(jokes, "jokes"), as_labeled(nonjokes, nonjoke_source), ratios, seed);
}

/// Jokes against their generated negatives; degenerate negatives are excluded.
inline BinaryDataset assemble_binary(const std::vector<Document>& jokes,
                                     const std::vector<NegativeExample>& negatives, const Ratios& ratios,
                                     std::uint64_t seed) {
    std::vector<LabeledExample> neg;
    std::size_t excluded = 0;
    for (const auto& n : negatives) {
        if (n.degenerate) {
            ++excluded;
            continue;
        }
        neg.push_back({"dyntemplate:" + n.source_id, n.text, Label::NonJoke, "dyntemplate"});
    }
    return assemble_binary(as_labeled(jokes, "jokes"), std::move(neg), ratios, seed, excluded);
}

/// One pair per joke and its own negative; sides by seeded fair coin.
inline PairDataset assemble_pairwise(const std::vector<Document>& jokes,
                                     const std::vector<NegativeExample>& negatives, const Ratios& ratios,
                                     std::uint64_t seed) {
    ratios.validate();
    std::unordered_map<std::string, const NegativeExample*> by_source;
    for (const auto& n : negatives) by_source.emplace(n.source_id, &n);
    std::vector<std::string> missing;
    for (const auto& j : jokes) {
        if (!by_source.count(j.id)) missing.push_back(j.id);
    }
    if (!missing.empty()) {
        std::string msg = "jokes without a generated counterpart:";
        for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 20); ++i) msg += " " + missing[i];
        if (missing.size() > 20) msg += " ... (" + std::to_string(missing.size()) + " total)";
        throw DataError(msg);
    }

    Rng sides(derive_seed(seed, "pair-sides"));
    std::vector<PairExample> pairs;
    std::size_t excluded = 0;
    for (const auto& j : jokes) {
        const NegativeExample& n = *by_source.at(j.id);
        const bool joke_is_a = coin(sides);  // drawn for every joke so sides do not depend on exclusions
        if (n.degenerate) {
            ++excluded;
            continue;
        }
        if (joke_is_a) {
            pairs.push_back({j.id, j.raw_text, n.text, Side::A});
        } else {
            pairs.push_back({j.id, n.text, j.raw_text, Side::B});
        }
    }
    if (pairs.empty()) throw DataError("no non-degenerate pairs");

    Rng rng(derive_seed(seed, "pair-split"));
    shuffle(pairs, rng);
    const auto s = detail::split_sizes(pairs.size(), ratios);
    PairDataset out;
    out.train.assign(pairs.begin(), pairs.begin() + s.train);
    out.validation.assign(pairs.begin() + s.train, pairs.begin() + s.train + s.valid);
    out.test.assign(pairs.begin() + s.train + s.valid, pairs.end());

    auto side_counts = [](const std::vector<PairExample>& xs) {
        const auto a = std::count_if(xs.begin(), xs.end(), [](const auto& p) { return p.target == Side::A; });
        return ordered_json{{"a", a}, {"b", static_cast<std::ptrdiff_t>(xs.size()) - a}};
    };
    auto& m = out.manifest;
    m.task = "pairwise";
    m.seed = seed;
    m.ratios = ratios;
    m.excluded_degenerate = excluded;
    m.counts["input"] = {{"jokes", jokes.size()}, {"negatives", negatives.size()}};
    m.counts["train"] = side_counts(out.train);
    m.counts["valid"] = side_counts(out.validation);
    m.counts["test"] = side_counts(out.test);
    return out;
}

// ---------------------------------------------------------------------------
// JSONL exchange

inline ordered_json to_json(const LabeledExample& x) {
    return {{"id", x.id}, {"text", x.text}, {"label", to_string(x.label)}, {"source", x.source}};
}

inline ordered_json to_json(const PairExample& x) {
    return {{"id", x.id}, {"text_a", x.text_a}, {"text_b", x.text_b}, {"target", to_string(x.target)}};
}

inline ordered_json to_json(const SplitManifest& m) {
    return {{"task", m.task},
            {"seed", m.seed},
            {"ratios", {m.ratios.train, m.ratios.valid, m.ratios.test}},
            {"counts", m.counts},
            {"excluded_degenerate", m.excluded_degenerate}};
}

namespace detail {

inline const std::string& string_field(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) throw DataError(std::string("missing or non-string field \"") + key + "\"");
    return it->get_ref<const std::string&>();
}

inline LabeledExample parse_example(const nlohmann::json& j, LabeledExample*) {
    LabeledExample x;
    x.id = string_field(j, "id");
    x.text = string_field(j, "text");
    const auto& label = string_field(j, "label");
    if (label == "joke") {
        x.label = Label::Joke;
    } else if (label == "nonjoke") {
        x.label = Label::NonJoke;
    } else {
        throw DataError("label must be \"joke\" or \"nonjoke\", got \"" + label + "\"");
    }
    x.source = string_field(j, "source");
    if (x.text.empty()) throw DataError("empty text");
    return x;
}

inline PairExample parse_example(const nlohmann::json& j, PairExample*) {
    PairExample x;
    x.id = string_field(j, "id");
    x.text_a = string_field(j, "text_a");
    x.text_b = string_field(j, "text_b");
    const auto& target = string_field(j, "target");
    if (target == "a") {
        x.target = Side::A;
    } else if (target == "b") {
        x.target = Side::B;
    } else {
        throw DataError("target must be \"a\" or \"b\", got \"" + target + "\"");
    }
    return x;
}

}  // namespace detail

template <typename Example>
std::vector<Example> read_examples_jsonl(std::istream& in, const std::string& origin) {
    std::vector<Example> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (is_blank(line)) continue;
        try {
            out.push_back(detail::parse_example(nlohmann::json::parse(line), static_cast<Example*>(nullptr)));
        } catch (const nlohmann::json::exception& e) {
            throw DataError(origin + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError(origin + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

template <typename Example>
void write_examples_jsonl(const std::vector<Example>& xs, std::ostream& out) {
    for (const auto& x : xs) out << to_json(x).dump() << '\n';
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << content;
    if (!out) throw DataError("failed writing " + path.string());
}

template <typename Example>
void export_jsonl(const DatasetSplit<Example>& split, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const std::pair<const char*, const std::vector<Example>*> files[] = {
        {"train.jsonl", &split.train}, {"valid.jsonl", &split.validation}, {"test.jsonl", &split.test}};
    for (const auto& [name, xs] : files) {
        std::ostringstream ss;
        write_examples_jsonl(*xs, ss);
        write_text_file(dir / name, ss.str());
    }
    write_text_file(dir / "manifest.json", to_json(split.manifest).dump(2) + "\n");
}

inline SplitManifest read_manifest(const std::filesystem::path& dir) {
    const auto path = dir / "manifest.json";
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    try {
        auto j = ordered_json::parse(in);
        SplitManifest m;
        m.task = j.at("task").get<std::string>();
        if (m.task != "single" && m.task != "pairwise") throw DataError("unknown task '" + m.task + "'");
        m.seed = j.at("seed").get<std::uint64_t>();
        const auto r = j.at("ratios").get<std::vector<double>>();
        if (r.size() != 3) throw DataError("ratios must have three entries");
        m.ratios = {r[0], r[1], r[2]};
        m.counts = j.at("counts");
        m.excluded_degenerate = j.at("excluded_degenerate").get<std::size_t>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

template <typename Example>
DatasetSplit<Example> import_jsonl(const std::filesystem::path& dir) {
    DatasetSplit<Example> out;
    out.manifest = read_manifest(dir);
    const bool pairwise = std::is_same_v<Example, PairExample>;
    if ((out.manifest.task == "pairwise") != pairwise) {
        throw DataError(dir.string() + ": dataset task is '" + out.manifest.task + "'");
    }
    const std::pair<const char*, std::vector<Example>*> files[] = {
        {"train.jsonl", &out.train}, {"valid.jsonl", &out.validation}, {"test.jsonl", &out.test}};
    for (const auto& [name, xs] : files) {
        const auto path = dir / name;
        std::ifstream in(path, std::ios::binary);
        if (!in) throw DataError("cannot read " + path.string());
        *xs = read_examples_jsonl<Example>(in, path.string());
    }
    std::unordered_set<std::string> ids;
    for (const auto* xs : {&out.train, &out.validation, &out.test}) {
        for (const auto& x : *xs) {
            if (!ids.insert(x.id).second) throw DataError(dir.string() + ": id '" + x.id + "' appears twice");
        }
    }
    return out;
}

}  // namespace mirth
