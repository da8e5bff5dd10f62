#include <gtest/gtest.h>

#include <sstream>

#include "mirth/error.hpp"
#include "mirth/nn/checkpoint.hpp"
#include "mirth/nn/embeddings.hpp"
#include "mirth/nn/training.hpp"
#include "mirth/testing/synthetic_corpus.hpp"

using namespace mirth;
using namespace mirth::nn;

namespace {

EmbeddingMatrix random_embeddings(const std::vector<std::string>& words, int dim, std::uint64_t seed) {
    Rng rng(seed);
    std::ostringstream out;
    out << words.size() << ' ' << dim << '\n' << std::setprecision(17);
    for (const auto& w : words) {
        out << w;
        for (int k = 0; k < dim; ++k) out << ' ' << uniform_real(rng, -1.0, 1.0);
        out << '\n';
    }
    std::istringstream in(out.str());
    return load_embeddings(in);
}

const std::vector<std::string> kWords = {"wat", "is", "groen", "en", "plakt", "aan", "de", "muur",
                                         "kermit", "sticker", "kabinet", "valt", "over", "begroting"};

ModelConfig config(EncoderKind kind, bool pairwise = false, bool trainable = false) {
    ModelConfig c;
    c.kind = kind;
    c.hidden_dim = 6;
    c.channels = 5;
    c.pairwise = pairwise;
    c.embeddings_trainable = trainable;
    c.dropout = 0.0;
    return c;
}

Example example_of(const Classifier& c, const std::string& a, const std::string& b = "", int target = 1) {
    Example e;
    e.input.a = c.encode_text(a);
    if (!b.empty()) e.input.b = c.encode_text(b);
    e.target = target;
    return e;
}

std::vector<LabeledExample> toy_single() {
    return {{"1", "wat is groen en plakt aan de muur", Label::Joke, "jokes"},
            {"2", "kermit de sticker", Label::Joke, "jokes"},
            {"3", "groen is de muur", Label::Joke, "jokes"},
            {"4", "wat plakt aan kermit", Label::Joke, "jokes"},
            {"5", "kabinet valt over de begroting", Label::NonJoke, "news"},
            {"6", "begroting valt", Label::NonJoke, "news"},
            {"7", "de begroting en het kabinet", Label::NonJoke, "news"},
            {"8", "kabinet over begroting", Label::NonJoke, "news"}};
}

TrainConfig quick_train(int epochs, std::uint64_t seed = 1) {
    TrainConfig t;
    t.epochs = epochs;
    t.batch_size = 4;
    t.learning_rate = 0.01;
    t.seed = seed;
    return t;
}

}  // namespace

TEST(Embeddings, LoadsMatrixWithHeader) {
    std::istringstream in("3 4\na 1 2 3 4\nb 0 0 0 1\nc 1 1 1 1\n");
    const auto e = load_embeddings(in);
    EXPECT_EQ(e.rows(), 3u);
    EXPECT_EQ(e.dim(), 4);
    EXPECT_DOUBLE_EQ(e.lookup("a")(2), 3.0);
    EXPECT_TRUE(e.lookup("zzz").isZero());
    EXPECT_EQ(e.lookup("zzz").size(), 4);
}

TEST(Embeddings, MeanPolicyUsesTheMeanVector) {
    std::istringstream in("a 1 2\nb 3 4\n");
    const auto e = load_embeddings(in, "e.txt", OovPolicy::Mean);
    EXPECT_DOUBLE_EQ(e.lookup("zzz")(0), 2.0);
    EXPECT_DOUBLE_EQ(e.lookup("zzz")(1), 3.0);
}

TEST(Embeddings, DuplicateWordKeepsFirstWithWarning) {
    std::istringstream in("a 1 2\na 3 4\n");
    const auto e = load_embeddings(in);
    EXPECT_EQ(e.rows(), 1u);
    EXPECT_DOUBLE_EQ(e.lookup("a")(0), 1.0);
    ASSERT_EQ(e.warnings.size(), 1u);
}

TEST(Embeddings, InconsistentDimensionNamesTheLine) {
    std::istringstream in("a 1 2\nb 3 4 5\n");
    try {
        load_embeddings(in, "vec.txt");
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("vec.txt:2"), std::string::npos);
    }
    std::istringstream empty("");
    EXPECT_THROW(load_embeddings(empty), DataError);
}

TEST(Encoder, LstmOutputHasHiddenDim) {
    Rng rng(1);
    ModelConfig c = config(EncoderKind::Lstm);
    c.hidden_dim = 8;
    Encoder enc("e", c, 4, rng);
    EncoderCache cache;
    EXPECT_EQ(enc.forward(Matrix::Random(5, 4), cache).size(), 8);
}

TEST(Encoder, OutputLengthIndependentOfInputLengthProperty) {
    Rng rng(2);
    for (auto kind : {EncoderKind::Cnn, EncoderKind::Lstm}) {
        Encoder enc("e", config(kind), 4, rng);
        for (Index len = 1; len < 30; ++len) {
            EncoderCache cache;
            const Vector out = enc.forward(Matrix::Random(len, 4), cache);
            EXPECT_EQ(out.size(), enc.output_dim());
            EXPECT_TRUE(out.allFinite());
        }
    }
}

TEST(Classifier, EmptyInputIsWellDefined) {
    const auto emb = random_embeddings(kWords, 6, 3);
    for (auto kind : {EncoderKind::Cnn, EncoderKind::Lstm}) {
        const Classifier c(config(kind), emb, 1);
        const auto p = c.probabilities(Input{});
        EXPECT_TRUE(std::isfinite(p[0]) && std::isfinite(p[1]));
        EXPECT_NEAR(p[0] + p[1], 1.0, 1e-12);
    }
}

TEST(Classifier, CnnIgnoresTrailingPadding) {
    const auto emb = random_embeddings(kWords, 6, 4);
    const Classifier c(config(EncoderKind::Cnn), emb, 1);
    Input short_in{c.encode_text("kermit de sticker"), {}};
    Input padded = short_in;
    padded.a.insert(padded.a.end(), 4, kPadId);
    EXPECT_EQ(c.probabilities(short_in), c.probabilities(padded));
}

TEST(Classifier, UnknownWordsMapToTheOovRow) {
    const auto emb = random_embeddings(kWords, 6, 4);
    const Classifier c(config(EncoderKind::Cnn), emb, 1);
    EXPECT_EQ(c.encode_text("zzz de"), (std::vector<int>{kOovId, 2 + 6}));
}

TEST(Classifier, TruncatesToMaxSequenceLength) {
    const auto emb = random_embeddings(kWords, 6, 4);
    ModelConfig cfg = config(EncoderKind::Cnn);
    cfg.max_sequence_length = 3;
    const Classifier c(cfg, emb, 1);
    bool cut = false;
    EXPECT_EQ(c.encode_text("wat is groen en", &cut).size(), 3u);
    EXPECT_TRUE(cut);
}

TEST(GradientCheck, AffineOnlyModelIsExact) {
    const auto emb = random_embeddings(kWords, 6, 5);
    Classifier c(config(EncoderKind::MeanPool), emb, 1);
    EXPECT_LT(gradient_check(c, example_of(c, "wat is groen"), 1e-5, 200), 1e-7);
}

TEST(GradientCheck, CnnSingle) {
    const auto emb = random_embeddings(kWords, 6, 6);
    Classifier c(config(EncoderKind::Cnn, false, true), emb, 1);
    EXPECT_LT(gradient_check(c, example_of(c, "wat is groen en plakt aan de muur"), 1e-5, 300), 1e-4);
}

TEST(GradientCheck, LstmSingleLengthFive) {
    const auto emb = random_embeddings(kWords, 6, 7);
    Classifier c(config(EncoderKind::Lstm, false, true), emb, 1);
    EXPECT_LT(gradient_check(c, example_of(c, "wat is groen en plakt", "", 0), 1e-5, 300), 1e-4);
}

TEST(GradientCheck, PairwiseHeads) {
    const auto emb = random_embeddings(kWords, 6, 8);
    for (auto kind : {EncoderKind::Cnn, EncoderKind::Lstm}) {
        Classifier c(config(kind, true, true), emb, 2);
        EXPECT_LT(gradient_check(c, example_of(c, "kermit de sticker", "kabinet valt over de begroting"), 1e-5, 300),
                  1e-4)
            << to_string(kind);
    }
}

TEST(Training, OverfitsEightExamples) {
    const auto emb = random_embeddings(kWords, 8, 9);
    for (auto kind : {EncoderKind::Cnn, EncoderKind::Lstm}) {
        const auto data = toy_single();
        const auto tm = train_classifier(config(kind), emb, data, data, quick_train(200));
        EXPECT_DOUBLE_EQ(tm.trace.epoch_valid_accuracy.back(), 1.0) << to_string(kind);
    }
}

TEST(Training, SameSeedSameLossTrace) {
    const auto emb = random_embeddings(kWords, 8, 10);
    ModelConfig cfg = config(EncoderKind::Lstm);
    cfg.dropout = 0.1;
    const auto a = train_classifier(cfg, emb, toy_single(), toy_single(), quick_train(5, 3));
    const auto b = train_classifier(cfg, emb, toy_single(), toy_single(), quick_train(5, 3));
    EXPECT_EQ(a.trace.step_loss, b.trace.step_loss);
    const auto c = train_classifier(cfg, emb, toy_single(), toy_single(), quick_train(5, 4));
    EXPECT_NE(a.trace.step_loss, c.trace.step_loss);
}

TEST(Training, ClippedNormNeverExceedsOne) {
    const auto emb = random_embeddings(kWords, 8, 11);
    TrainConfig t = quick_train(20);
    t.learning_rate = 0.1;
    t.batch_size = 1;
    const auto tm = train_classifier(config(EncoderKind::Cnn, false, true), emb, toy_single(), toy_single(), t);
    EXPECT_LE(tm.trace.max_clipped_norm, 1.0 + 1e-9);
}

TEST(Training, ClipGlobalNormRescales) {
    Param p("w", 1, 2);
    p.grad << 3.0, 4.0;
    EXPECT_NEAR(clip_global_norm({&p}, 1.0), 1.0, 1e-15);
    EXPECT_NEAR(p.grad(0, 0), 0.6, 1e-15);
    p.grad << 0.3, 0.4;
    EXPECT_NEAR(clip_global_norm({&p}, 1.0), 0.5, 1e-15);
}

TEST(Training, DropoutIsOffAtInference) {
    const auto emb = random_embeddings(kWords, 8, 12);
    ModelConfig cfg = config(EncoderKind::Cnn);
    cfg.dropout = 0.5;
    const Classifier c(cfg, emb, 1);
    const Input in{c.encode_text("kermit de sticker"), {}};
    EXPECT_EQ(c.probabilities(in), c.probabilities(in));
    EXPECT_EQ(c.loss(in, 1), c.loss(in, 1));
    Rng rng(1);
    std::set<double> noisy;
    for (int k = 0; k < 10; ++k) noisy.insert(c.loss(in, 1, &rng));
    EXPECT_GT(noisy.size(), 1u);
}

TEST(Training, NonFiniteLossIsARuntimeFailure) {
    const auto emb = random_embeddings(kWords, 4, 13);
    const Classifier base(config(EncoderKind::MeanPool), emb, 1);
    Matrix table = base.params()[0]->value;
    table.row(2).setConstant(std::numeric_limits<double>::quiet_NaN());
    Classifier broken = Classifier::from_table(base.config(), base.words(), table);
    const auto prepared = prepare(broken, toy_single());
    EXPECT_THROW(fit(broken, prepared.examples, prepared.examples, quick_train(1)), RuntimeFailure);
}

TEST(Training, EmptyDataIsAnError) {
    const auto emb = random_embeddings(kWords, 4, 13);
    EXPECT_THROW(train_classifier(config(EncoderKind::Cnn), emb, std::vector<LabeledExample>{}, toy_single(),
                                  quick_train(1)),
                 DataError);
}

TEST(Pairwise, SwappingSidesKeepsAccuracy) {
    const synth::SyntheticCorpus corpus;
    const auto jokes = corpus.jokes(300, 1);
    const auto news = corpus.news(300, 2);
    std::ostringstream vec;
    corpus.write_embeddings(vec, 4000, 16, 3);
    std::istringstream vin(vec.str());
    const auto emb = load_embeddings(vin);

    Rng rng(5);
    std::vector<PairExample> pairs;
    for (std::size_t i = 0; i < 300; ++i) {
        const bool a = coin(rng);
        pairs.push_back({std::to_string(i), a ? jokes[i] : news[i], a ? news[i] : jokes[i], a ? Side::A : Side::B});
    }
    const std::vector<PairExample> train(pairs.begin(), pairs.begin() + 200);
    const std::vector<PairExample> valid(pairs.begin() + 200, pairs.begin() + 240);
    const std::vector<PairExample> test(pairs.begin() + 240, pairs.end());
    ModelConfig cfg = config(EncoderKind::Cnn);
    cfg.channels = 16;
    TrainConfig t = quick_train(4);
    t.batch_size = 16;
    const auto tm = train_pairwise(cfg, emb, train, valid, t);
    EXPECT_TRUE(tm.model.config().pairwise);
    EXPECT_TRUE(tm.model.config().embeddings_trainable);

    std::vector<PairExample> swapped;
    for (const auto& p : test) swapped.push_back({p.id, p.text_b, p.text_a, p.target == Side::A ? Side::B : Side::A});
    const double plain = accuracy(tm.model, prepare(tm.model, test).examples);
    const double flipped = accuracy(tm.model, prepare(tm.model, swapped).examples);
    EXPECT_NEAR(plain, flipped, 0.02 + 1e-12);
}

TEST(Search, TenTrialsGiveTenRecordsAndOneTestReport) {
    const auto emb = random_embeddings(kWords, 6, 14);
    BinaryDataset data;
    data.train = toy_single();
    data.validation = toy_single();
    data.test = toy_single();
    ModelConfig cfg = config(EncoderKind::Lstm);
    const auto r = random_search(SearchSpace{}, cfg, quick_train(2), emb, data, 10, 77);
    ASSERT_EQ(r.trials.size(), 10u);
    int with_test = 0;
    for (const auto& t : r.trials) {
        with_test += t.test.has_value();
        EXPECT_GE(t.validation_accuracy, 0.0);
        EXPECT_LE(t.validation_accuracy, 1.0);
    }
    EXPECT_EQ(with_test, 1);
    EXPECT_TRUE(r.trials[r.best_trial].test.has_value());
    for (const auto& t : r.trials) EXPECT_LE(t.validation_accuracy, r.trials[r.best_trial].validation_accuracy);

    const auto again = random_search(SearchSpace{}, cfg, quick_train(2), emb, data, 10, 77);
    for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(r.trials[i].validation_accuracy, again.trials[i].validation_accuracy);
}

TEST(Search, HyperparametersStayInTheSpaceProperty) {
    const SearchSpace space;
    const std::set<int> dims(space.hidden_dims.begin(), space.hidden_dims.end());
    std::set<int> seen;
    for (int i = 0; i < 500; ++i) {
        const auto h = sample_hyperparameters(space, EncoderKind::Lstm, 3, i);
        EXPECT_GE(h.learning_rate, 1e-3);
        EXPECT_LE(h.learning_rate, 1e-1);
        ASSERT_TRUE(h.hidden_dim.has_value());
        EXPECT_TRUE(dims.count(*h.hidden_dim));
        seen.insert(*h.hidden_dim);
    }
    EXPECT_EQ(seen, dims);
    EXPECT_FALSE(sample_hyperparameters(space, EncoderKind::Cnn, 3, 0).hidden_dim.has_value());
}

TEST(Search, TrialJsonRoundTripsAccuracies) {
    TrialRecord a;
    a.validation_accuracy = 0.625;
    TrialRecord b;
    b.trial = 1;
    b.validation_accuracy = 0.5;
    std::istringstream in(to_json(a).dump() + "\n" + to_json(b).dump() + "\n");
    EXPECT_EQ(read_trial_accuracies(in), (std::vector<double>{0.625, 0.5}));
    std::istringstream bad(R"({"validation_accuracy": 1.5})");
    EXPECT_THROW(read_trial_accuracies(bad), DataError);
}

TEST(Checkpoint, RoundTripKeepsPredictions) {
    const auto emb = random_embeddings(kWords, 6, 15);
    for (bool pairwise : {false, true}) {
        const Classifier c(config(EncoderKind::Lstm, pairwise, pairwise), emb, 9);
        std::stringstream buf;
        save_checkpoint(c, buf);
        const auto loaded = load_checkpoint(buf);
        const Input in{c.encode_text("kermit de sticker"), pairwise ? c.encode_text("de muur") : std::vector<int>{}};
        EXPECT_EQ(loaded.probabilities(in), c.probabilities(in));
        EXPECT_EQ(loaded.words(), c.words());
    }
}

TEST(Checkpoint, DamagedFilesAreErrors) {
    const auto emb = random_embeddings(kWords, 6, 15);
    std::ostringstream buf;
    save_checkpoint(Classifier(config(EncoderKind::Cnn), emb, 9), buf);
    const std::string full = buf.str();
    std::istringstream truncated(full.substr(0, full.size() * 2 / 3));
    EXPECT_THROW(load_checkpoint(truncated), DataError);
    std::istringstream wrong("MIRTH-NN v0\n");
    EXPECT_THROW(load_checkpoint(wrong), DataError);
}
