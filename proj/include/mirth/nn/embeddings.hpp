#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "mirth/error.hpp"

namespace mirth::nn {

enum class OovPolicy { Zero, Mean };

/// Pretrained word vectors in the whitespace-separated text format.
struct EmbeddingMatrix {
    std::vector<std::string> words;
    std::unordered_map<std::string, std::size_t> vocab;
    Eigen::MatrixXd matrix;  // rows x dim
    Eigen::VectorXd mean;
    OovPolicy oov_policy = OovPolicy::Zero;
    std::vector<std::string> warnings;

    std::size_t rows() const { return words.size(); }
    int dim() const { return static_cast<int>(matrix.cols()); }

    bool contains(const std::string& word) const { return vocab.count(word) != 0; }

    Eigen::VectorXd oov_vector() const {
        return oov_policy == OovPolicy::Mean ? mean : Eigen::VectorXd::Zero(dim());
    }

    Eigen::VectorXd lookup(const std::string& word) const {
        auto it = vocab.find(word);
        if (it == vocab.end()) return oov_vector();
        return matrix.row(static_cast<Eigen::Index>(it->second)).transpose();
    }
};

/// Optional "rows dim" header, then one "word v1 ... vdim" line per word.
/// Later duplicates of a word are ignored with a warning.
inline EmbeddingMatrix load_embeddings(std::istream& in, const std::string& origin = "<stream>",
                                       OovPolicy policy = OovPolicy::Zero) {
    EmbeddingMatrix e;
    e.oov_policy = policy;
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    long dim = -1;
    auto fail = [&](const std::string& what) {
        throw DataError(origin + ":" + std::to_string(lineno) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ss(line);
        std::vector<std::string> fields;
        std::string f;
        while (ss >> f) fields.push_back(f);
        if (fields.empty()) continue;
        if (lineno == 1 && fields.size() == 2) {
            try {
                std::size_t u1 = 0, u2 = 0;
                std::stol(fields[0], &u1);
                const long d = std::stol(fields[1], &u2);
                if (u1 == fields[0].size() && u2 == fields[1].size()) {
                    if (d < 1) fail("header dimension must be positive");
                    dim = d;
                    continue;
                }
            } catch (const std::logic_error&) {
                // not a header: a one-dimensional vector line
            }
        }
        const long d = static_cast<long>(fields.size()) - 1;
        if (d < 1) fail("line has a word but no vector");
        if (dim < 0) dim = d;
        if (d != dim) fail("expected " + std::to_string(dim) + " values, found " + std::to_string(d));
        if (e.vocab.count(fields[0])) {
            e.warnings.push_back(origin + ":" + std::to_string(lineno) + ": duplicate word '" + fields[0] +
                                 "' ignored");
            continue;
        }
        std::vector<double> v(static_cast<std::size_t>(d));
        for (long k = 0; k < d; ++k) {
            try {
                std::size_t used = 0;
                v[k] = std::stod(fields[k + 1], &used);
                if (used != fields[k + 1].size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                fail("malformed value '" + fields[k + 1] + "'");
            }
            if (!std::isfinite(v[k])) fail("non-finite value");
        }
        e.vocab.emplace(fields[0], e.words.size());
        e.words.push_back(fields[0]);
        rows.push_back(std::move(v));
    }
    if (rows.empty()) throw DataError(origin + ": no embedding vectors");
    e.matrix.resize(static_cast<Eigen::Index>(rows.size()), dim);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (long k = 0; k < dim; ++k) e.matrix(static_cast<Eigen::Index>(r), k) = rows[r][k];
    }
    e.mean = e.matrix.colwise().mean().transpose();
    return e;
}

inline EmbeddingMatrix load_embeddings(const std::string& path, OovPolicy policy = OovPolicy::Zero) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path);
    return load_embeddings(in, path, policy);
}

}  // namespace mirth::nn
