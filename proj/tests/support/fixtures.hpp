#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "clir/corpus.hpp"
#include "clir/dense_search.hpp"
#include "clir/embedding.hpp"

namespace clir::test {

// Removed with its contents on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

// Rows drawn from an isotropic Gaussian and normalized.
dense::EmbeddingMatrix random_unit_matrix(std::size_t rows, std::size_t dim, std::uint64_t seed);

// Ids "<prefix>0", "<prefix>1", ...
dense::IdMap numbered_ids(std::size_t n, const std::string& prefix);

// Single-language corpus of words "w<k>" drawn from a skewed distribution so
// that document frequencies vary.
Corpus random_word_corpus(std::size_t docs, std::size_t vocab, std::size_t min_len,
                          std::size_t max_len, std::uint64_t seed, const LangCode& lang = "en");
QuerySet random_word_queries(std::size_t n, std::size_t vocab, std::size_t len,
                             std::uint64_t seed, const LangCode& lang = "en");

// A corpus over shared concepts where every language writes in its own script.
// Queries are concept subsets of a gold document, rendered in the query
// language; the lexicon maps every non-pivot word to the pivot (first)
// language's word for the same concept.
struct ScriptFixture {
    std::vector<LangCode> languages;
    Corpus corpus;
    QuerySet queries;
    Judgments qrels;
    dense::AlignmentLexicon lexicon;
};

struct ScriptFixtureOptions {
    std::vector<LangCode> languages = {"en", "el"};
    std::size_t concepts = 300;
    std::size_t docs_per_language = 100;
    std::size_t concepts_per_doc = 30;
    std::size_t queries_per_pair = 20;
    std::size_t concepts_per_query = 5;
    std::uint64_t seed = 7;
    // Fraction of a language's concepts that get a lexicon entry; absent
    // languages are fully covered.
    std::map<LangCode, double> lexicon_coverage;
};

ScriptFixture make_script_fixture(const ScriptFixtureOptions& options = {});

// corpus.jsonl, queries.jsonl, qrels.txt, lexicon.tsv
void write_script_fixture(const ScriptFixture& fixture, const std::filesystem::path& dir);

// Runs the clir binary with the given argument string; returns its exit code.
int run_clir(const std::string& args, const std::filesystem::path& log = {});

// One-line typology records for every language and feature set, with values
// derived from the language code.
void write_typology(const std::vector<LangCode>& languages, const std::filesystem::path& path);

// Scores for a scoring-request file: judged relevant docs get 0.9 plus a
// small id hash, everything else the hash alone.
void write_fake_scores(const std::filesystem::path& requests, const Judgments& qrels,
                       const std::filesystem::path& scores);

struct PipelineRun {
    // "<step>: exit <code>" for the first failing step, empty when all passed.
    std::string failure;
    // Files expected to be byte-identical across repeated runs.
    std::vector<std::filesystem::path> reproducible;
    std::filesystem::path log;
};

// Writes the fixture under dir/raw and drives every subcommand, from ingest
// to bench-latency, leaving outputs in dir/out.
PipelineRun run_cli_pipeline(const ScriptFixture& fixture, const std::filesystem::path& dir,
                             std::uint64_t seed = 42);

} // namespace clir::test
