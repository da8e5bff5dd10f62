#pragma once

// Tokenization, case folding, corpus reading, unigram frequency statistics
// and n-gram extraction.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mirth/error.hpp"

namespace mirth {

namespace utf8 {

inline constexpr char32_t kInvalid = 0xFFFFFFFF;

/// Decodes the code point starting at text[pos]; advances pos. Returns kInvalid
/// (and advances one byte) on a malformed sequence.
inline char32_t decode(std::string_view text, std::size_t& pos) {
    const auto b0 = static_cast<unsigned char>(text[pos]);
    if (b0 < 0x80) {
        ++pos;
        return b0;
    }
    int len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        ++pos;
        return kInvalid;
    }
    if (pos + len > text.size()) {
        ++pos;
        return kInvalid;
    }
    for (int i = 1; i < len; ++i) {
        const auto b = static_cast<unsigned char>(text[pos + i]);
        if ((b & 0xC0) != 0x80) {
            ++pos;
            return kInvalid;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    // Overlong forms, surrogates and out-of-range values.
    static constexpr char32_t kMin[5] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
        ++pos;
        return kInvalid;
    }
    pos += len;
    return cp;
}

inline void append(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

inline bool is_valid(std::string_view text) {
    std::size_t pos = 0;
    while (pos < text.size()) {
        if (decode(text, pos) == kInvalid) return false;
    }
    return true;
}

/// Simple case mapping for ASCII, Latin-1 and Latin Extended-A.
inline char32_t to_lower(char32_t c) {
    if (c >= 'A' && c <= 'Z') return c + 32;
    if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
    if (c >= 0x100 && c <= 0x137 && c != 0x130 && c % 2 == 0) return c + 1;
    if (c >= 0x139 && c <= 0x148 && c % 2 == 1) return c + 1;
    if (c >= 0x14A && c <= 0x177 && c % 2 == 0) return c + 1;
    if (c == 0x178) return 0xFF;
    if (c >= 0x179 && c <= 0x17E && c % 2 == 1) return c + 1;
    return c;
}

inline char32_t to_upper(char32_t c) {
    if (c >= 'a' && c <= 'z') return c - 32;
    if (c >= 0xE0 && c <= 0xFE && c != 0xF7) return c - 32;
    if (c == 0xFF) return 0x178;
    if (c >= 0x101 && c <= 0x137 && c != 0x131 && c % 2 == 1) return c - 1;
    if (c >= 0x13A && c <= 0x148 && c % 2 == 0) return c - 1;
    if (c >= 0x14B && c <= 0x177 && c % 2 == 1) return c - 1;
    if (c >= 0x17A && c <= 0x17E && c % 2 == 0) return c - 1;
    return c;
}

inline bool is_upper(char32_t c) { return to_lower(c) != c; }
inline bool is_lower(char32_t c) { return to_upper(c) != c; }

inline std::vector<char32_t> code_points(std::string_view text) {
    std::vector<char32_t> out;
    std::size_t pos = 0;
    while (pos < text.size()) out.push_back(decode(text, pos));
    return out;
}

}  // namespace utf8

inline std::string case_fold(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t start = pos;
        const char32_t cp = utf8::decode(text, pos);
        if (cp == utf8::kInvalid) {
            out.append(text.substr(start, pos - start));
        } else {
            utf8::append(out, utf8::to_lower(cp));
        }
    }
    return out;
}

enum class CharClass { Space, Punct, Digit, Letter };

inline CharClass classify(char32_t c) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v' || c == 0xA0 ||
        (c >= 0x2000 && c <= 0x200B) || c == 0x202F || c == 0x205F || c == 0x3000 || c == 0xFEFF) {
        return CharClass::Space;
    }
    if (c >= '0' && c <= '9') return CharClass::Digit;
    if (c < 0x80) {
        return ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) ? CharClass::Letter
                                                                  : CharClass::Punct;
    }
    if (c == 0xA1 || c == 0xA7 || c == 0xAB || c == 0xB6 || c == 0xB7 || c == 0xBB || c == 0xBF ||
        (c >= 0x2010 && c <= 0x2027) || (c >= 0x2030 && c <= 0x205E) || c == utf8::kInvalid) {
        return CharClass::Punct;
    }
    return CharClass::Letter;
}

/// Apostrophes and hyphens that may sit inside a word.
inline bool is_joiner(char32_t c) { return c == '\'' || c == 0x2019 || c == '-' || c == 0x2010; }

struct Token {
    std::string surface;
    std::string normalized;
    std::size_t start = 0;  // byte offset of the first byte
    std::size_t end = 0;    // one past the last byte
    bool is_punct = false;
    bool is_word = false;

    bool operator==(const Token&) const = default;
};

/// Splits on whitespace; punctuation becomes single-character tokens except
/// apostrophes and hyphens flanked by alphanumerics, which stay in the word.
inline std::vector<Token> tokenize(std::string_view text) {
    struct Cp {
        char32_t c;
        std::size_t start, end;
        CharClass cls;
    };
    std::vector<Cp> cps;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t start = pos;
        const char32_t c = utf8::decode(text, pos);
        cps.push_back({c, start, pos, classify(c)});
    }

    std::vector<Token> tokens;
    auto alnum = [](const Cp& cp) {
        return cp.cls == CharClass::Letter || cp.cls == CharClass::Digit;
    };
    auto emit = [&](std::size_t first, std::size_t last) {  // code point range [first, last)
        Token t;
        t.start = cps[first].start;
        t.end = cps[last - 1].end;
        t.surface = std::string(text.substr(t.start, t.end - t.start));
        t.normalized = case_fold(t.surface);
        if (last - first == 1 && cps[first].cls == CharClass::Punct) {
            t.is_punct = true;
        } else {
            t.is_word = std::all_of(cps.begin() + first, cps.begin() + last, [](const Cp& cp) {
                return cp.cls == CharClass::Letter || is_joiner(cp.c);
            });
        }
        tokens.push_back(std::move(t));
    };

    std::size_t i = 0;
    while (i < cps.size()) {
        if (cps[i].cls == CharClass::Space) {
            ++i;
        } else if (cps[i].cls == CharClass::Punct) {
            emit(i, i + 1);
            ++i;
        } else {
            std::size_t j = i + 1;
            while (j < cps.size()) {
                if (alnum(cps[j])) {
                    ++j;
                } else if (is_joiner(cps[j].c) && j + 1 < cps.size() && alnum(cps[j + 1])) {
                    j += 2;
                } else {
                    break;
                }
            }
            emit(i, j);
            i = j;
        }
    }
    return tokens;
}

struct Document {
    std::string id;
    std::string raw_text;
    std::vector<Token> tokens;

    Document() = default;
    Document(std::string id_, std::string text)
        : id(std::move(id_)), raw_text(std::move(text)), tokens(tokenize(raw_text)) {}
};

/// Rebuilds text from the token surfaces, keeping the original gaps.
inline std::string detokenize(std::string_view raw_text, const std::vector<Token>& tokens) {
    std::string out;
    std::size_t cursor = 0;
    for (const auto& t : tokens) {
        out.append(raw_text.substr(cursor, t.start - cursor));
        out.append(t.surface);
        cursor = t.end;
    }
    out.append(raw_text.substr(std::min(cursor, raw_text.size())));
    return out;
}

inline std::vector<std::string> normalized_words(const std::vector<Token>& tokens) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(t.normalized);
    return out;
}

// ---------------------------------------------------------------------------
// Corpus files

inline bool is_blank(std::string_view line) {
    return std::all_of(line.begin(), line.end(), [](char c) {
        return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v';
    });
}

/// One document per non-blank line; id is "<source>:<1-based line number>".
inline std::vector<Document> read_lines_corpus(std::istream& in, const std::string& source,
                                               const std::string& origin = "<stream>") {
    std::vector<Document> docs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (!utf8::is_valid(line)) {
            throw DataError(origin + ":" + std::to_string(lineno) + ": invalid UTF-8");
        }
        if (is_blank(line)) continue;
        docs.emplace_back(source + ":" + std::to_string(lineno), line);
    }
    return docs;
}

inline std::vector<Document> read_lines_corpus(const std::string& path, const std::string& source) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path);
    return read_lines_corpus(in, source, path);
}

// ---------------------------------------------------------------------------
// Frequency statistics

struct FrequencyTable {
    std::map<std::string, std::uint64_t> counts;
    std::uint64_t total_tokens = 0;

    std::uint64_t count(const std::string& word) const {
        auto it = counts.find(word);
        return it == counts.end() ? 0 : it->second;
    }
    bool empty() const { return counts.empty(); }

    void add(const Document& doc) {
        for (const auto& t : doc.tokens) {
            if (!t.is_word) continue;
            ++counts[t.normalized];
            ++total_tokens;
        }
    }

    FrequencyTable& operator+=(const FrequencyTable& other) {
        for (const auto& [w, c] : other.counts) counts[w] += c;
        total_tokens += other.total_tokens;
        return *this;
    }

    bool operator==(const FrequencyTable&) const = default;
};

inline FrequencyTable build_frequency_table(const std::vector<Document>& documents) {
    FrequencyTable table;
    for (const auto& d : documents) table.add(d);
    return table;
}

/// Nearest-rank percentile over the per-word counts (one entry per distinct
/// word): the count at rank ceil(q * V) of the ascending order, rank 1 for q = 0.
inline std::uint64_t frequency_percentile_threshold(const FrequencyTable& table, double q) {
    if (table.empty()) throw DataError("empty frequency table");
    if (!(q >= 0.0 && q <= 1.0)) throw UsageError("percentile must lie in [0, 1]");
    std::vector<std::uint64_t> values;
    values.reserve(table.counts.size());
    for (const auto& [w, c] : table.counts) values.push_back(c);
    std::sort(values.begin(), values.end());
    const auto v = static_cast<double>(values.size());
    // The small slack keeps products such as 0.6 * 5 from rounding up a rank.
    auto rank = static_cast<std::size_t>(std::ceil(q * v - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    return values[rank - 1];
}

// ---------------------------------------------------------------------------
// N-grams

using Ngram = std::vector<std::string>;

/// All contiguous n-grams of orders n_min..n_max, grouped by order, each
/// order in document order.
inline std::vector<Ngram> extract_ngrams(const std::vector<Token>& tokens, int n_min, int n_max) {
    if (n_min < 1 || n_max < n_min) throw UsageError("n-gram orders must satisfy 1 <= n_min <= n_max");
    std::vector<Ngram> grams;
    const auto len = static_cast<int>(tokens.size());
    for (int n = n_min; n <= n_max; ++n) {
        for (int i = 0; i + n <= len; ++i) {
            Ngram g;
            g.reserve(n);
            for (int k = 0; k < n; ++k) g.push_back(tokens[i + k].normalized);
            grams.push_back(std::move(g));
        }
    }
    return grams;
}

inline std::string join_ngram(const Ngram& gram) {
    std::string out;
    for (std::size_t i = 0; i < gram.size(); ++i) {
        if (i) out += ' ';
        out += gram[i];
    }
    return out;
}

}  // namespace mirth
