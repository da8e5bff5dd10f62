#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "mirth/error.hpp"
#include "mirth/tagger.hpp"
#include "mirth/testing/synthetic_corpus.hpp"

using namespace mirth;

namespace {

std::vector<TaggedSentence> synthetic_sentences(std::size_t n, std::uint64_t seed) {
    const synth::SyntheticCorpus corpus;
    std::ostringstream conllu;
    synth::SyntheticCorpus::write_conllu(corpus.tagged(n, seed), conllu);
    std::istringstream in(conllu.str());
    return read_conllu(in);
}

std::vector<std::string> forms_of(const TaggedSentence& s) {
    std::vector<std::string> out;
    for (const auto& [form, tag] : s) out.push_back(form);
    return out;
}

const TaggerModel& synthetic_model() {
    static const TaggerModel model = train_tagger(synthetic_sentences(1500, 1), 5, 1);
    return model;
}

}  // namespace

TEST(Tagger, MemorizesSingleSentenceAfterOneEpoch) {
    const auto model = train_tagger({{{"de", "DET"}, {"muur", "NOUN"}}}, 1, 1);
    EXPECT_EQ(tag_forms(model, {"de", "muur"}), (std::vector<std::string>{"DET", "NOUN"}));
}

TEST(Tagger, EmptyInputGivesNoTags) { EXPECT_TRUE(tag_forms(synthetic_model(), {}).empty()); }

TEST(Tagger, PunctuationIsAlwaysPunct) {
    const auto model = train_tagger({{{"de", "DET"}, {"muur", "NOUN"}}}, 1, 1);
    EXPECT_EQ(tag_forms(model, {"!"}), (std::vector<std::string>{"PUNCT"}));
}

TEST(Tagger, UnseenHeidWordIsNoun) {
    // Every word is rare enough to stay out of the lexicon, so tags must come
    // from the learned affix and context weights.
    const std::vector<std::string> stems = {"waar", "vrij", "schoon", "gezond", "een",  "zeker", "blij",
                                            "traag", "dom",  "wijs",   "fier",   "bang", "stil",  "mild",
                                            "gek",   "vlot", "lief",   "trots",  "doof", "kaal"};
    std::vector<TaggedSentence> data;
    for (std::size_t i = 0; i < stems.size(); ++i) {
        const std::string& a = stems[i];
        const std::string& b = stems[(i + 7) % stems.size()];
        data.push_back({{a + "heid", "NOUN"}, {b + "t", "VERB"}});
        data.push_back({{b + "ig", "ADJ"}, {a + "heid", "NOUN"}});
        data.push_back({{a + "t", "VERB"}, {b + "ig", "ADJ"}});
    }
    const auto model = train_tagger(data, 5, 1);
    EXPECT_TRUE(model.lexicon.empty());
    EXPECT_EQ(tag_forms(model, {"snelheid"})[0], "NOUN");
    EXPECT_EQ(tag_forms(model, {"grappig", "snelheid"})[1], "NOUN");
}

TEST(Tagger, FitsItsOwnTrainingSet) {
    const auto sentences = synthetic_sentences(1500, 1);
    std::size_t total = 0, correct = 0;
    for (const auto& s : sentences) {
        const auto predicted = tag_forms(synthetic_model(), forms_of(s));
        for (std::size_t i = 0; i < s.size(); ++i) {
            ++total;
            correct += predicted[i] == s[i].second;
        }
    }
    EXPECT_GE(static_cast<double>(correct) / static_cast<double>(total), 0.95);
}

TEST(Tagger, KermitRegressionFixture) {
    const auto tags = tag(synthetic_model(), tokenize("Kermit de sticker"));
    ASSERT_EQ(tags.size(), 3u);
    EXPECT_TRUE(tags[0].pos == "PROPN" || tags[0].pos == "NOUN") << tags[0].pos;
    EXPECT_EQ(tags[1].pos, "DET");
    EXPECT_EQ(tags[2].pos, "NOUN");
}

TEST(Tagger, TagsAreClosedAndDeterministic) {
    const auto& model = synthetic_model();
    std::set<std::string> allowed(model.tagset.begin(), model.tagset.end());
    allowed.insert(kPunctTag);
    const synth::SyntheticCorpus corpus;
    for (const auto& text : corpus.jokes(200, 77)) {
        const auto tokens = tokenize(text);
        const auto first = tag_sequence(model, tokens);
        EXPECT_EQ(first, tag_sequence(model, tokens));
        for (const auto& t : first) EXPECT_TRUE(allowed.count(t)) << t;
    }
}

TEST(Tagger, SameSeedSameModel) {
    const auto data = synthetic_sentences(300, 4);
    const auto a = train_tagger(data, 3, 9);
    const auto b = train_tagger(data, 3, 9);
    std::ostringstream sa, sb;
    save_tagger(a, sa);
    save_tagger(b, sb);
    EXPECT_EQ(sa.str(), sb.str());
}

TEST(Tagger, EmptyTrainingDataIsAnError) { EXPECT_THROW(train_tagger({}, 5, 1), DataError); }

TEST(TaggerPersistence, RoundTripPreservesTagsOnProbeSet) {
    const auto& model = synthetic_model();
    std::stringstream buf;
    save_tagger(model, buf);
    const auto loaded = load_tagger(buf);
    for (const auto& s : synthetic_sentences(100, 99)) {
        EXPECT_EQ(tag_forms(model, forms_of(s)), tag_forms(loaded, forms_of(s)));
    }
}

TEST(TaggerPersistence, TruncatedFileIsAnError) {
    std::ostringstream buf;
    save_tagger(synthetic_model(), buf);
    const std::string full = buf.str();
    std::istringstream truncated(full.substr(0, full.size() / 2));
    EXPECT_THROW(load_tagger(truncated), DataError);
    std::istringstream empty("");
    EXPECT_THROW(load_tagger(empty), DataError);
}

TEST(TaggerPersistence, FileFollowsLineFormat) {
    std::ostringstream buf;
    save_tagger(train_tagger({{{"de", "DET"}, {"muur", "NOUN"}}}, 1, 1), buf);
    std::istringstream in(buf.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, kTaggerHeader);
    std::size_t records = 0;
    std::string last;
    while (std::getline(in, line)) {
        const std::string kind = line.substr(0, line.find('\t'));
        EXPECT_TRUE(kind == "tagset" || kind == "lexicon" || kind == "weight" || kind == "end") << line;
        ++records;
        last = line;
    }
    EXPECT_EQ(last, "end\t" + std::to_string(records - 1));
}

TEST(Conllu, SkipsMultiwordAndEmptyNodes) {
    std::istringstream in(
        "# text = zo'n ding\n"
        "1-2\tzo'n\t_\t_\t_\t_\t_\t_\t_\t_\n"
        "1\tzo\t_\tADV\t_\t_\t_\t_\t_\t_\n"
        "2\t'n\t_\tDET\t_\t_\t_\t_\t_\t_\n"
        "2.1\tx\t_\tX\t_\t_\t_\t_\t_\t_\n"
        "3\tding\t_\tNOUN\t_\t_\t_\t_\t_\t_\n\n");
    const auto s = read_conllu(in);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0], (TaggedSentence{{"zo", "ADV"}, {"'n", "DET"}, {"ding", "NOUN"}}));
}

TEST(Conllu, MalformedLinesNameTheirLocation) {
    std::istringstream in("1\tde\t_\n");
    try {
        read_conllu(in, "bad.conllu");
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("bad.conllu:1"), std::string::npos);
    }
}
