// Writes a synthetic corpus bundle: jokes.txt, news.txt, proverbs.txt,
// tagged.conllu and embeddings.txt.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "mirth/error.hpp"
#include "mirth/testing/synthetic_corpus.hpp"

namespace fs = std::filesystem;

namespace {

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw mirth::DataError("cannot write " + path.string());
    for (const auto& l : lines) out << l << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generate a deterministic synthetic corpus bundle"};
    std::string out_dir;
    std::uint64_t seed = 2020;
    std::size_t jokes = 2400, news = 2400, proverbs = 600, tagged = 3000, emb_sentences = 30000;
    int dim = 48;
    app.add_option("--out", out_dir, "Output directory")->required();
    app.add_option("--seed", seed, "Generator seed");
    app.add_option("--jokes", jokes, "Number of jokes");
    app.add_option("--news", news, "Number of news headlines");
    app.add_option("--proverbs", proverbs, "Number of proverbs");
    app.add_option("--tagged", tagged, "Number of gold-tagged sentences");
    app.add_option("--embedding-sentences", emb_sentences, "Sentences used to fit the word vectors");
    app.add_option("--dim", dim, "Word vector dimension")->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);

    try {
        fs::create_directories(out_dir);
        mirth::synth::SyntheticOptions opt;
        opt.seed = seed;
        const mirth::synth::SyntheticCorpus corpus(opt);
        const fs::path dir(out_dir);
        write_lines(dir / "jokes.txt", corpus.jokes(jokes, seed));
        write_lines(dir / "news.txt", corpus.news(news, seed));
        write_lines(dir / "proverbs.txt", corpus.proverbs(proverbs, seed));
        {
            std::ofstream out(dir / "tagged.conllu", std::ios::binary);
            mirth::synth::SyntheticCorpus::write_conllu(corpus.tagged(tagged, seed), out);
        }
        {
            std::ofstream out(dir / "embeddings.txt", std::ios::binary);
            corpus.write_embeddings(out, emb_sentences, dim, seed);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
