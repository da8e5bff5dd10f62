#pragma once

// Text checkpoints:
//   MIRTH-NN v1
//   config {json}
//   vocab N            followed by N lines, one word each (table rows 2..N+1)
//   tensor NAME R C    followed by R lines of C decimal values
//   ...
//   end

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mirth/error.hpp"
#include "mirth/nn/network.hpp"

namespace mirth::nn {

inline constexpr const char* kCheckpointHeader = "MIRTH-NN v1";

inline nlohmann::ordered_json to_json(const ModelConfig& c) {
    return {{"kind", to_string(c.kind)},
            {"hidden_dim", c.hidden_dim},
            {"channels", c.channels},
            {"conv_layers", c.conv_layers},
            {"kernel_size", c.kernel_size},
            {"pooling", "max"},
            {"nonlinearity", "relu"},
            {"pairwise", c.pairwise},
            {"embeddings_trainable", c.embeddings_trainable},
            {"max_sequence_length", c.max_sequence_length},
            {"dropout", c.dropout}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.kind = parse_encoder_kind(j.at("kind").get<std::string>());
    c.hidden_dim = j.at("hidden_dim").get<int>();
    c.channels = j.at("channels").get<int>();
    c.conv_layers = j.at("conv_layers").get<int>();
    c.kernel_size = j.at("kernel_size").get<int>();
    c.pairwise = j.at("pairwise").get<bool>();
    c.embeddings_trainable = j.at("embeddings_trainable").get<bool>();
    c.max_sequence_length = j.at("max_sequence_length").get<int>();
    c.dropout = j.at("dropout").get<double>();
    return c;
}

inline void save_checkpoint(const Classifier& model, std::ostream& out) {
    out << kCheckpointHeader << '\n';
    out << "config " << to_json(model.config()).dump() << '\n';
    out << "vocab " << model.words().size() << '\n';
    for (const auto& w : model.words()) out << w << '\n';
    out << std::setprecision(17);
    for (const Param* p : model.params()) {
        out << "tensor " << p->name << ' ' << p->value.rows() << ' ' << p->value.cols() << '\n';
        for (Index r = 0; r < p->value.rows(); ++r) {
            for (Index c = 0; c < p->value.cols(); ++c) {
                if (c) out << ' ';
                out << p->value(r, c);
            }
            out << '\n';
        }
    }
    out << "end\n";
}

inline void save_checkpoint(const Classifier& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    save_checkpoint(model, out);
    if (!out) throw DataError("failed writing " + path);
}

inline Classifier load_checkpoint(std::istream& in, const std::string& origin = "<stream>") {
    std::string line;
    std::size_t lineno = 0;
    auto fail = [&](const std::string& what) -> void {
        throw DataError(origin + ":" + std::to_string(lineno) + ": " + what);
    };
    auto next = [&]() -> std::string& {
        if (!std::getline(in, line)) {
            ++lineno;
            fail("unexpected end of file");
        }
        ++lineno;
        return line;
    };

    if (next() != kCheckpointHeader) fail(std::string("missing header '") + kCheckpointHeader + "'");
    if (next().rfind("config ", 0) != 0) fail("expected config record");
    ModelConfig cfg;
    try {
        cfg = model_config_from_json(nlohmann::json::parse(line.substr(7)));
    } catch (const nlohmann::json::exception& e) {
        fail(std::string("bad config: ") + e.what());
    }
    std::size_t n_words = 0;
    {
        std::istringstream ss(next());
        std::string kw;
        if (!(ss >> kw >> n_words) || kw != "vocab") fail("expected vocab record");
    }
    std::vector<std::string> words;
    words.reserve(n_words);
    for (std::size_t k = 0; k < n_words; ++k) words.push_back(next());

    auto read_tensor = [&](const std::string& expected_name, Index rows, Index cols) {
        std::istringstream ss(next());
        std::string kw, name;
        Index r = -1, c = -1;
        if (!(ss >> kw >> name >> r >> c) || kw != "tensor") fail("expected tensor record");
        if (name != expected_name) fail("expected tensor '" + expected_name + "', found '" + name + "'");
        if ((rows >= 0 && r != rows) || (cols >= 0 && c != cols)) fail("tensor '" + name + "' has the wrong shape");
        Matrix m(r, c);
        for (Index i = 0; i < r; ++i) {
            std::istringstream row(next());
            for (Index j = 0; j < c; ++j) {
                std::string tok;
                if (!(row >> tok)) fail("tensor row too short");
                try {
                    std::size_t used = 0;
                    m(i, j) = std::stod(tok, &used);
                    if (used != tok.size()) throw std::invalid_argument(tok);
                } catch (const std::exception&) {
                    fail("malformed value '" + tok + "'");
                }
                if (!std::isfinite(m(i, j))) fail("non-finite value");
            }
            std::string extra;
            if (row >> extra) fail("tensor row too long");
        }
        return m;
    };

    Matrix table = read_tensor("embedding", static_cast<Index>(n_words) + 2, -1);
    Classifier model = Classifier::from_table(cfg, std::move(words), std::move(table));
    for (Param* p : model.params()) {
        if (p->name == "embedding") continue;
        p->value = read_tensor(p->name, p->value.rows(), p->value.cols());
    }
    if (next() != "end") fail("expected end marker");
    return model;
}

inline Classifier load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path);
    return load_checkpoint(in, path);
}

}  // namespace mirth::nn
