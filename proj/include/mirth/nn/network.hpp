#pragma once

// Sequence classifiers over word embeddings with hand-written backpropagation.
//
// A sequence is a matrix X (length x dim), one embedding row per token.
// Encoders map X to a fixed-length vector; a classifier runs one encoder
// (single text) or two encoders with separate parameters (pairs), applies
// dropout to the (concatenated) encoding and an affine layer to two logits.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mirth/error.hpp"
#include "mirth/nn/embeddings.hpp"
#include "mirth/random.hpp"
#include "mirth/text.hpp"

namespace mirth::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct Param {
    std::string name;
    Matrix value;
    Matrix grad;
    bool trainable = true;

    Param() = default;
    Param(std::string n, Index rows, Index cols)
        : name(std::move(n)), value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}
};

inline void init_uniform(Matrix& m, Rng& rng, double limit) {
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = uniform_real(rng, -limit, limit);
}

inline void init_glorot(Param& p, Rng& rng, double fan_in, double fan_out) {
    init_uniform(p.value, rng, std::sqrt(6.0 / (fan_in + fan_out)));
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

enum class EncoderKind { Cnn, Lstm, MeanPool };

inline const char* to_string(EncoderKind k) {
    switch (k) {
        case EncoderKind::Cnn: return "cnn";
        case EncoderKind::Lstm: return "lstm";
        case EncoderKind::MeanPool: return "meanpool";
    }
    return "?";
}

inline EncoderKind parse_encoder_kind(const std::string& s) {
    if (s == "cnn") return EncoderKind::Cnn;
    if (s == "lstm") return EncoderKind::Lstm;
    if (s == "meanpool") return EncoderKind::MeanPool;
    throw UsageError("unknown encoder kind '" + s + "'");
}

struct ModelConfig {
    EncoderKind kind = EncoderKind::Cnn;
    int hidden_dim = 64;   // LSTM state size
    int channels = 64;     // CNN filters per layer
    int conv_layers = 2;
    int kernel_size = 3;
    bool pairwise = false;
    bool embeddings_trainable = false;
    int max_sequence_length = 64;
    double dropout = 0.1;

    void validate() const {
        if (hidden_dim < 1 || channels < 1) throw UsageError("hidden_dim and channels must be positive");
        if (conv_layers < 1) throw UsageError("conv_layers must be >= 1");
        if (kernel_size < 1 || kernel_size % 2 == 0) throw UsageError("kernel_size must be odd and positive");
        if (max_sequence_length < 1) throw UsageError("max_sequence_length must be >= 1");
        if (!(dropout >= 0.0 && dropout < 1.0)) throw UsageError("dropout must lie in [0, 1)");
    }
};

// ---------------------------------------------------------------------------
// Convolution over time with zero padding ("same" length), followed by ReLU.

struct ConvCache {
    Matrix unfolded;  // L x (k * in)
    Matrix pre;       // L x out, before ReLU
    Matrix out;       // L x out
};

struct ConvLayer {
    Param weight;  // out x (k * in)
    Param bias;    // out x 1
    int kernel = 3;
    int in_dim = 0;

    ConvLayer() = default;
    ConvLayer(std::string name, int in, int out, int k, Rng& rng)
        : weight(name + ".weight", out, static_cast<Index>(k) * in), bias(name + ".bias", out, 1), kernel(k),
          in_dim(in) {
        init_glorot(weight, rng, static_cast<double>(k * in), static_cast<double>(k * out));
    }

    void forward(const Matrix& x, ConvCache& c) const {
        const Index len = x.rows();
        const int half = kernel / 2;
        c.unfolded = Matrix::Zero(len, static_cast<Index>(kernel) * in_dim);
        for (Index t = 0; t < len; ++t) {
            for (int j = 0; j < kernel; ++j) {
                const Index s = t + j - half;
                if (s >= 0 && s < len) c.unfolded.row(t).segment(static_cast<Index>(j) * in_dim, in_dim) = x.row(s);
            }
        }
        c.pre = c.unfolded * weight.value.transpose();
        c.pre.rowwise() += bias.value.col(0).transpose();
        c.out = c.pre.cwiseMax(0.0);
    }

    void backward(const Matrix& d_out, const ConvCache& c, Matrix* d_in) {
        const Matrix d_pre = d_out.cwiseProduct((c.pre.array() > 0.0).cast<double>().matrix());
        weight.grad.noalias() += d_pre.transpose() * c.unfolded;
        bias.grad.col(0) += d_pre.colwise().sum().transpose();
        if (!d_in) return;
        const Matrix d_unfolded = d_pre * weight.value;
        const Index len = d_out.rows();
        const int half = kernel / 2;
        *d_in = Matrix::Zero(len, in_dim);
        for (Index t = 0; t < len; ++t) {
            for (int j = 0; j < kernel; ++j) {
                const Index s = t + j - half;
                if (s >= 0 && s < len) d_in->row(s) += d_unfolded.row(t).segment(static_cast<Index>(j) * in_dim, in_dim);
            }
        }
    }
};

// ---------------------------------------------------------------------------
// LSTM returning the last hidden state. Gate order in the stacked weights:
// input, forget, cell candidate, output.

struct LstmCache {
    Matrix x;                       // L x in
    std::vector<Vector> i, f, g, o;
    std::vector<Vector> c, h, tanh_c;  // index t holds the state after step t
};

struct LstmLayer {
    Param w_in;   // 4H x in
    Param w_rec;  // 4H x H
    Param bias;   // 4H x 1
    int hidden = 0;

    LstmLayer() = default;
    LstmLayer(std::string name, int in, int h, Rng& rng)
        : w_in(name + ".w_in", 4 * h, in), w_rec(name + ".w_rec", 4 * h, h), bias(name + ".bias", 4 * h, 1),
          hidden(h) {
        init_glorot(w_in, rng, in, h);
        init_glorot(w_rec, rng, h, h);
        bias.value.block(h, 0, h, 1).setOnes();  // forget gate starts open
    }

    Vector forward(const Matrix& x, LstmCache& c) const {
        const Index len = x.rows();
        const Index h = hidden;
        c.x = x;
        for (auto* v : {&c.i, &c.f, &c.g, &c.o, &c.c, &c.h, &c.tanh_c}) v->assign(static_cast<std::size_t>(len), Vector());
        Vector h_prev = Vector::Zero(h), c_prev = Vector::Zero(h);
        for (Index t = 0; t < len; ++t) {
            const Vector z = w_in.value * x.row(t).transpose() + w_rec.value * h_prev + bias.value.col(0);
            const auto ti = static_cast<std::size_t>(t);
            c.i[ti] = z.segment(0, h).unaryExpr([](double v) { return sigmoid(v); });
            c.f[ti] = z.segment(h, h).unaryExpr([](double v) { return sigmoid(v); });
            c.g[ti] = z.segment(2 * h, h).array().tanh().matrix();
            c.o[ti] = z.segment(3 * h, h).unaryExpr([](double v) { return sigmoid(v); });
            c.c[ti] = c.f[ti].cwiseProduct(c_prev) + c.i[ti].cwiseProduct(c.g[ti]);
            c.tanh_c[ti] = c.c[ti].array().tanh().matrix();
            c.h[ti] = c.o[ti].cwiseProduct(c.tanh_c[ti]);
            h_prev = c.h[ti];
            c_prev = c.c[ti];
        }
        return h_prev;
    }

    void backward(const Vector& d_last, const LstmCache& c, Matrix* d_in) {
        const Index len = c.x.rows();
        const Index h = hidden;
        if (d_in) *d_in = Matrix::Zero(len, c.x.cols());
        Vector dh = d_last;
        Vector dc = Vector::Zero(h);
        Vector dz(4 * h);
        for (Index t = len - 1; t >= 0; --t) {
            const auto ti = static_cast<std::size_t>(t);
            const Vector& i = c.i[ti];
            const Vector& f = c.f[ti];
            const Vector& g = c.g[ti];
            const Vector& o = c.o[ti];
            const Vector& tc = c.tanh_c[ti];
            const Vector c_prev = t > 0 ? c.c[ti - 1] : Vector::Zero(h);
            const Vector h_prev = t > 0 ? c.h[ti - 1] : Vector::Zero(h);

            const Vector d_o = dh.cwiseProduct(tc);
            dc += dh.cwiseProduct(o).cwiseProduct((1.0 - tc.array().square()).matrix());
            const Vector d_i = dc.cwiseProduct(g);
            const Vector d_g = dc.cwiseProduct(i);
            const Vector d_f = dc.cwiseProduct(c_prev);
            dz.segment(0, h) = d_i.cwiseProduct((i.array() * (1.0 - i.array())).matrix());
            dz.segment(h, h) = d_f.cwiseProduct((f.array() * (1.0 - f.array())).matrix());
            dz.segment(2 * h, h) = d_g.cwiseProduct((1.0 - g.array().square()).matrix());
            dz.segment(3 * h, h) = d_o.cwiseProduct((o.array() * (1.0 - o.array())).matrix());

            w_in.grad.noalias() += dz * c.x.row(t);
            w_rec.grad.noalias() += dz * h_prev.transpose();
            bias.grad.col(0) += dz;
            if (d_in) d_in->row(t) = (w_in.value.transpose() * dz).transpose();
            dh = w_rec.value.transpose() * dz;
            dc = dc.cwiseProduct(f);
        }
    }
};

// ---------------------------------------------------------------------------

struct EncoderCache {
    std::vector<ConvCache> conv;
    std::vector<Index> argmax;
    LstmCache lstm;
    Index length = 0;
};

class Encoder {
public:
    Encoder() = default;
    Encoder(const std::string& name, const ModelConfig& cfg, int input_dim, Rng& rng)
        : kind_(cfg.kind), input_dim_(input_dim) {
        switch (kind_) {
            case EncoderKind::Cnn: {
                int in = input_dim;
                for (int l = 0; l < cfg.conv_layers; ++l) {
                    conv_.emplace_back(name + ".conv" + std::to_string(l + 1), in, cfg.channels, cfg.kernel_size, rng);
                    in = cfg.channels;
                }
                output_dim_ = cfg.channels;
                break;
            }
            case EncoderKind::Lstm:
                lstm_ = LstmLayer(name + ".lstm", input_dim, cfg.hidden_dim, rng);
                output_dim_ = cfg.hidden_dim;
                break;
            case EncoderKind::MeanPool:
                output_dim_ = input_dim;
                break;
        }
    }

    int output_dim() const { return output_dim_; }

    Vector forward(const Matrix& x, EncoderCache& cache) const {
        cache.length = x.rows();
        switch (kind_) {
            case EncoderKind::Cnn: {
                cache.conv.resize(conv_.size());
                const Matrix* in = &x;
                for (std::size_t l = 0; l < conv_.size(); ++l) {
                    conv_[l].forward(*in, cache.conv[l]);
                    in = &cache.conv[l].out;
                }
                const Matrix& top = cache.conv.back().out;
                Vector pooled(top.cols());
                cache.argmax.assign(static_cast<std::size_t>(top.cols()), 0);
                for (Index ch = 0; ch < top.cols(); ++ch) {
                    Index arg = 0;
                    pooled(ch) = top.col(ch).maxCoeff(&arg);
                    cache.argmax[static_cast<std::size_t>(ch)] = arg;
                }
                return pooled;
            }
            case EncoderKind::Lstm:
                return lstm_.forward(x, cache.lstm);
            case EncoderKind::MeanPool:
                return x.colwise().mean().transpose();
        }
        return {};
    }

    void backward(const Vector& d_out, const EncoderCache& cache, Matrix* d_in) {
        switch (kind_) {
            case EncoderKind::Cnn: {
                Matrix d = Matrix::Zero(cache.length, conv_.back().weight.value.rows());
                for (Index ch = 0; ch < d.cols(); ++ch) d(cache.argmax[static_cast<std::size_t>(ch)], ch) = d_out(ch);
                for (std::size_t l = conv_.size(); l-- > 0;) {
                    Matrix d_below;
                    const bool need = l > 0 || d_in != nullptr;
                    conv_[l].backward(d, cache.conv[l], need ? &d_below : nullptr);
                    if (l > 0) d = std::move(d_below);
                    else if (d_in) *d_in = std::move(d_below);
                }
                break;
            }
            case EncoderKind::Lstm:
                lstm_.backward(d_out, cache.lstm, d_in);
                break;
            case EncoderKind::MeanPool:
                if (d_in) {
                    *d_in = (d_out / static_cast<double>(cache.length)).transpose().replicate(cache.length, 1);
                }
                break;
        }
    }

    std::vector<Param*> params() { return collect<Param>(*this); }
    std::vector<const Param*> params() const { return collect<const Param>(*this); }

private:
    template <typename P, typename Self>
    static std::vector<P*> collect(Self& self) {
        std::vector<P*> out;
        for (auto& c : self.conv_) {
            out.push_back(&c.weight);
            out.push_back(&c.bias);
        }
        if (self.kind_ == EncoderKind::Lstm) {
            out.push_back(&self.lstm_.w_in);
            out.push_back(&self.lstm_.w_rec);
            out.push_back(&self.lstm_.bias);
        }
        return out;
    }

    EncoderKind kind_ = EncoderKind::Cnn;
    int input_dim_ = 0;
    int output_dim_ = 0;
    std::vector<ConvLayer> conv_;
    LstmLayer lstm_;
};

// ---------------------------------------------------------------------------

/// Token ids into the classifier's embedding table; `b` is empty for single texts.
struct Input {
    std::vector<int> a;
    std::vector<int> b;
};

struct Example {
    Input input;
    int target = 0;  // 1 = JOKE (single) or side A (pairwise)
};

inline constexpr int kPadId = 0;
inline constexpr int kOovId = 1;

class Classifier {
public:
    Classifier() = default;

    /// Builds the table from `emb`; when `restrict_to` is given only those
    /// words get their own row, everything else maps to the OOV row.
    Classifier(const ModelConfig& cfg, const EmbeddingMatrix& emb, std::uint64_t seed,
               const std::vector<std::string>* restrict_to = nullptr)
        : config_(cfg) {
        cfg.validate();
        std::vector<std::string> words;
        if (restrict_to) {
            for (const auto& w : *restrict_to) {
                if (emb.contains(w)) words.push_back(w);
            }
        } else {
            words = emb.words;
        }
        const int dim = emb.dim();
        Matrix table = Matrix::Zero(static_cast<Index>(words.size()) + 2, dim);
        table.row(kOovId) = emb.oov_vector().transpose();
        for (std::size_t r = 0; r < words.size(); ++r) {
            table.row(static_cast<Index>(r) + 2) = emb.lookup(words[r]).transpose();
        }
        Rng rng(derive_seed(seed, "init"));
        init_layers(std::move(words), std::move(table), rng);
    }

    /// Rebuilds a classifier around an explicit table (checkpoint loading).
    static Classifier from_table(const ModelConfig& cfg, std::vector<std::string> words, Matrix table) {
        cfg.validate();
        Classifier c;
        c.config_ = cfg;
        Rng rng(0);
        c.init_layers(std::move(words), std::move(table), rng);
        return c;
    }

    const ModelConfig& config() const { return config_; }
    const std::vector<std::string>& words() const { return words_; }
    int embedding_dim() const { return static_cast<int>(embedding_.value.cols()); }

    /// Token ids of `text`, truncated to max_sequence_length. Sets *truncated.
    std::vector<int> encode_text(std::string_view text, bool* truncated = nullptr) const {
        std::vector<int> ids;
        for (const auto& t : tokenize(text)) {
            auto it = index_.find(t.normalized);
            ids.push_back(it == index_.end() ? kOovId : it->second);
        }
        const auto cap = static_cast<std::size_t>(config_.max_sequence_length);
        if (truncated) *truncated = ids.size() > cap;
        if (ids.size() > cap) ids.resize(cap);
        return ids;
    }

    std::array<double, 2> probabilities(const Input& in) const {
        Forward fw;
        forward(in, nullptr, fw);
        return {fw.probs(0), fw.probs(1)};
    }

    /// 1 = JOKE / side A. Ties go to 0.
    int predict(const Input& in) const {
        const auto p = probabilities(in);
        return p[1] > p[0] ? 1 : 0;
    }

    /// Cross-entropy loss; dropout is active only when `dropout_rng` is set.
    double loss(const Input& in, int target, Rng* dropout_rng = nullptr) const {
        Forward fw;
        forward(in, dropout_rng, fw);
        return -std::log(std::max(fw.probs(target), 1e-300));
    }

    /// Adds d(loss)/d(params) to the grads of trainable params; returns the loss.
    double accumulate_gradients(const Input& in, int target, Rng* dropout_rng = nullptr) {
        Forward fw;
        forward(in, dropout_rng, fw);
        const double l = -std::log(std::max(fw.probs(target), 1e-300));

        Vector d_logits = fw.probs;
        d_logits(target) -= 1.0;
        head_w_.grad.noalias() += d_logits * fw.dropped.transpose();
        head_b_.grad.col(0) += d_logits;
        const Vector d_features = (head_w_.value.transpose() * d_logits).cwiseProduct(fw.mask);

        Index offset = 0;
        for (std::size_t e = 0; e < encoders_.size(); ++e) {
            const int od = encoders_[e].output_dim();
            const Vector d_enc = d_features.segment(offset, od);
            offset += od;
            Matrix d_x;
            encoders_[e].backward(d_enc, fw.caches[e], embedding_.trainable ? &d_x : nullptr);
            if (embedding_.trainable) {
                const auto& ids = fw.ids[e];
                for (std::size_t t = 0; t < ids.size(); ++t) {
                    if (ids[t] != kPadId) embedding_.grad.row(ids[t]) += d_x.row(static_cast<Index>(t));
                }
            }
        }
        return l;
    }

    /// Embedding table, encoder parameters, then the output layer.
    std::vector<Param*> params() { return collect<Param>(*this); }
    std::vector<const Param*> params() const { return collect<const Param>(*this); }

    std::vector<Param*> trainable_params() {
        std::vector<Param*> out;
        for (auto* p : params()) {
            if (p->trainable) out.push_back(p);
        }
        return out;
    }

    void zero_grad() {
        for (auto* p : params()) {
            if (p->trainable) p->grad.setZero();
        }
    }

private:
    struct Forward {
        std::vector<std::vector<int>> ids;
        std::vector<EncoderCache> caches;
        Vector features, mask, dropped, probs;
    };

    template <typename P, typename Self>
    static std::vector<P*> collect(Self& self) {
        std::vector<P*> out{&self.embedding_};
        for (auto& e : self.encoders_) {
            for (auto* p : e.params()) out.push_back(p);
        }
        out.push_back(&self.head_w_);
        out.push_back(&self.head_b_);
        return out;
    }

    void init_layers(std::vector<std::string> words, Matrix table, Rng& rng) {
        words_ = std::move(words);
        index_.clear();
        for (std::size_t r = 0; r < words_.size(); ++r) index_.emplace(words_[r], static_cast<int>(r) + 2);
        embedding_ = Param("embedding", table.rows(), table.cols());
        embedding_.value = std::move(table);
        embedding_.trainable = config_.embeddings_trainable;
        encoders_.clear();
        const int sides = config_.pairwise ? 2 : 1;
        int features = 0;
        for (int s = 0; s < sides; ++s) {
            encoders_.emplace_back(sides == 1 ? "encoder" : (s == 0 ? "encoder_a" : "encoder_b"), config_,
                                   static_cast<int>(embedding_.value.cols()), rng);
            features += encoders_.back().output_dim();
        }
        head_w_ = Param("head.weight", 2, features);
        head_b_ = Param("head.bias", 2, 1);
        init_glorot(head_w_, rng, features, 2);
    }

    /// Drops trailing padding; an all-padding input keeps a single pad token.
    static std::vector<int> unpadded(const std::vector<int>& ids) {
        auto end = ids.end();
        while (end != ids.begin() && *(end - 1) == kPadId) --end;
        if (end == ids.begin()) return {kPadId};
        return {ids.begin(), end};
    }

    Matrix gather(const std::vector<int>& ids) const {
        Matrix x(static_cast<Index>(ids.size()), embedding_.value.cols());
        for (std::size_t t = 0; t < ids.size(); ++t) x.row(static_cast<Index>(t)) = embedding_.value.row(ids[t]);
        return x;
    }

    void forward(const Input& in, Rng* dropout_rng, Forward& fw) const {
        if (!config_.pairwise && !in.b.empty()) throw UsageError("single-text classifier given a pair");
        fw.ids.clear();
        fw.ids.push_back(unpadded(in.a));
        if (config_.pairwise) fw.ids.push_back(unpadded(in.b));
        fw.caches.assign(fw.ids.size(), EncoderCache());
        int total = 0;
        for (const auto& e : encoders_) total += e.output_dim();
        fw.features.resize(total);
        Index offset = 0;
        for (std::size_t e = 0; e < encoders_.size(); ++e) {
            const Vector enc = encoders_[e].forward(gather(fw.ids[e]), fw.caches[e]);
            fw.features.segment(offset, enc.size()) = enc;
            offset += enc.size();
        }
        fw.mask = Vector::Ones(total);
        if (dropout_rng && config_.dropout > 0.0) {
            const double keep = 1.0 - config_.dropout;
            for (Index k = 0; k < total; ++k) fw.mask(k) = uniform01(*dropout_rng) < config_.dropout ? 0.0 : 1.0 / keep;
        }
        fw.dropped = fw.features.cwiseProduct(fw.mask);
        const Vector logits = head_w_.value * fw.dropped + head_b_.value.col(0);
        const double m = logits.maxCoeff();
        fw.probs = (logits.array() - m).exp().matrix();
        fw.probs /= fw.probs.sum();
    }

    ModelConfig config_;
    std::vector<std::string> words_;
    std::unordered_map<std::string, int> index_;
    Param embedding_;
    std::vector<Encoder> encoders_;
    Param head_w_;
    Param head_b_;
};

}  // namespace mirth::nn
