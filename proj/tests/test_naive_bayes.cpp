#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "mirth/error.hpp"
#include "mirth/naive_bayes.hpp"
#include "mirth/random.hpp"

using namespace mirth;

namespace {

std::vector<LabeledExample> toy_set() {
    return {{"1", "wat is groen", Label::Joke, "jokes"},
            {"2", "kermit de kikker", Label::Joke, "jokes"},
            {"3", "groen licht voor de begroting", Label::NonJoke, "news"},
            {"4", "kabinet valt over de begroting", Label::NonJoke, "news"},
            {"5", "de kikker springt", Label::Joke, "jokes"}};
}

}  // namespace

TEST(Vocabulary, GramInEveryDocumentHasIdfOne) {
    const auto v = fit_vocabulary({"de kat", "de hond", "de muis"});
    EXPECT_DOUBLE_EQ(v.idf[v.index.at("de")], 1.0);
    EXPECT_DOUBLE_EQ(v.idf[v.index.at("kat")], std::log(4.0 / 2.0) + 1.0);
}

TEST(Vocabulary, RanksByDocumentFrequencyThenGram) {
    const auto v = fit_vocabulary({"b a", "a c", "a b"}, 3, 1, 1);
    EXPECT_EQ(v.grams, (std::vector<std::string>{"a", "b", "c"}));
    const auto two = fit_vocabulary({"b a", "a c", "a b"}, 2, 1, 2);
    EXPECT_EQ(two.grams, (std::vector<std::string>{"a", "b"}));
}

TEST(Vocabulary, SizeCappedAndIndicesDenseProperty) {
    Rng rng(21);
    const std::vector<std::string> words = {"de", "kat", "muur", "groen", "plakt", "een", "is", "wat", "en"};
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<std::string> texts;
        for (int d = 0; d < 25; ++d) {
            std::string t;
            for (std::size_t k = 0; k < 1 + uniform_index(rng, 8); ++k) t += words[uniform_index(rng, words.size())] + " ";
            texts.push_back(t);
        }
        const std::size_t cap = 1 + uniform_index(rng, 200);
        const auto v = fit_vocabulary(texts, cap);
        EXPECT_LE(v.size(), cap);
        for (std::size_t i = 0; i < v.size(); ++i) {
            EXPECT_EQ(v.index.at(v.grams[i]), i);
            EXPECT_TRUE(std::isfinite(v.idf[i]));
            EXPECT_GE(v.idf[i], 1.0);
        }
    }
}

TEST(Vocabulary, EmptyTrainingSetIsAnError) { EXPECT_THROW(fit_vocabulary({}), DataError); }

TEST(Tfidf, EqualWeightsGiveInverseSqrtTwo) {
    const auto v = fit_vocabulary({"a b"}, 10, 1, 1);
    const auto x = tfidf_transform(v, "a b");
    ASSERT_EQ(x.entries.size(), 2u);
    EXPECT_NEAR(x.entries[0].second, 1.0 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(x.entries[1].second, 1.0 / std::sqrt(2.0), 1e-12);
}

TEST(Tfidf, UnknownGramsIgnoredAndNormIsOne) {
    const auto v = fit_vocabulary({"a b", "a c"}, 10, 1, 3);
    EXPECT_TRUE(tfidf_transform(v, "zzz yyy").empty());
    EXPECT_NEAR(tfidf_transform(v, "a a b zzz").norm(), 1.0, 1e-12);
}

TEST(NaiveBayes, MemorizesTwoExamples) {
    const auto c = NbClassifier::fit({{"1", "a", Label::Joke, "jokes"}, {"2", "b", Label::NonJoke, "news"}});
    EXPECT_EQ(c.predict("a").label, Label::Joke);
    EXPECT_EQ(c.predict("b").label, Label::NonJoke);
}

TEST(NaiveBayes, ZeroVectorFollowsThePrior) {
    auto data = toy_set();
    const auto c = NbClassifier::fit(data);
    const auto p = c.predict("onbekend woord");
    EXPECT_EQ(p.label, Label::Joke);
    EXPECT_DOUBLE_EQ(p.log_scores[1], std::log(3.0 / 5.0));
}

TEST(NaiveBayes, TiesGoToNonjoke) {
    const auto c = NbClassifier::fit({{"1", "a", Label::Joke, "jokes"}, {"2", "b", Label::NonJoke, "news"}});
    EXPECT_EQ(c.predict("zzz").label, Label::NonJoke);
}

TEST(NaiveBayes, HugeAlphaConvergesToPriorProperty) {
    const auto data = toy_set();
    const auto c = NbClassifier::fit(data, 1e6);
    for (const auto& x : data) EXPECT_EQ(c.predict(x.text).label, Label::Joke) << x.text;
    for (std::size_t i = 0; i < c.vocab.size(); ++i) {
        EXPECT_NEAR(c.model.feature_log_likelihood[0][i], c.model.feature_log_likelihood[1][i], 1e-5);
    }
}

TEST(NaiveBayes, LikelihoodsAreDistributions) {
    const auto c = NbClassifier::fit(toy_set());
    for (int k = 0; k < 2; ++k) {
        double s = 0.0;
        for (double l : c.model.feature_log_likelihood[k]) s += std::exp(l);
        EXPECT_NEAR(s, 1.0, 1e-9);
    }
    EXPECT_NEAR(std::exp(c.model.class_log_prior[0]) + std::exp(c.model.class_log_prior[1]), 1.0, 1e-12);
}

TEST(NaiveBayes, Errors) {
    EXPECT_THROW(NbClassifier::fit({{"1", "a", Label::Joke, "jokes"}}), DataError);
    EXPECT_THROW(train_nb({SparseVector{}}, {Label::Joke}, 1, 0.0), UsageError);
    EXPECT_THROW(train_nb({SparseVector{}}, {}, 1), UsageError);
}

TEST(NbPersistence, RoundTripIsExact) {
    const auto c = NbClassifier::fit(toy_set());
    std::stringstream buf;
    save_nb(c, buf);
    const auto loaded = load_nb(buf);
    EXPECT_EQ(loaded.vocab.grams, c.vocab.grams);
    EXPECT_EQ(loaded.vocab.idf, c.vocab.idf);
    EXPECT_EQ(loaded.model.feature_log_likelihood, c.model.feature_log_likelihood);
    EXPECT_EQ(loaded.model.class_log_prior, c.model.class_log_prior);
    for (const auto& x : toy_set()) EXPECT_EQ(loaded.predict(x.text).log_scores, c.predict(x.text).log_scores);
}

TEST(NbPersistence, DamagedFilesAreErrors) {
    std::ostringstream buf;
    save_nb(NbClassifier::fit(toy_set()), buf);
    const std::string full = buf.str();
    std::istringstream truncated(full.substr(0, full.size() - 5));
    EXPECT_THROW(load_nb(truncated), DataError);
    std::istringstream wrong_header("MIRTH-NB v9\n");
    EXPECT_THROW(load_nb(wrong_header), DataError);
    std::string garbled = full;
    garbled.replace(garbled.find("alpha\t1"), 7, "alpha\tx");
    std::istringstream bad(garbled);
    EXPECT_THROW(load_nb(bad, "model.nb"), DataError);
}
