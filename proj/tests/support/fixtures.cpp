#include "fixtures.hpp"

#include "clir/rerank.hpp"

#include <fmt/format.h>
#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace clir::test {

namespace fs = std::filesystem;

TempDir::TempDir()
{
    std::string tmpl = (fs::temp_directory_path() / "clir-test-XXXXXX").string();
    if (mkdtemp(tmpl.data()) == nullptr) {
        throw std::runtime_error("mkdtemp failed");
    }
    path_ = tmpl;
}

TempDir::~TempDir()
{
    std::error_code ec;
    fs::remove_all(path_, ec);
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    out << content;
}

dense::EmbeddingMatrix random_unit_matrix(std::size_t rows, std::size_t dim, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::vector<float> data(rows * dim);
    for (std::size_t r = 0; r < rows; ++r) {
        std::vector<double> v(dim);
        double norm = 0.0;
        for (auto& x : v) {
            x = normal(rng);
            norm += x * x;
        }
        norm = std::sqrt(norm);
        for (std::size_t c = 0; c < dim; ++c) {
            data[r * dim + c] = static_cast<float>(v[c] / norm);
        }
    }
    return {rows, dim, std::move(data)};
}

dense::IdMap numbered_ids(std::size_t n, const std::string& prefix)
{
    std::vector<std::string> ids;
    ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        ids.push_back(prefix + std::to_string(i));
    }
    return dense::IdMap(std::move(ids));
}

namespace {

std::string skewed_words(std::mt19937_64& rng, std::size_t vocab, std::size_t len)
{
    // Squaring a uniform draw favours low word numbers.
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::string text;
    for (std::size_t i = 0; i < len; ++i) {
        const double x = u(rng);
        const auto w = static_cast<std::size_t>(x * x * static_cast<double>(vocab));
        if (i > 0) {
            text += ' ';
        }
        text += "w" + std::to_string(std::min(w, vocab - 1));
    }
    return text;
}

void append_utf8(std::string& out, char32_t cp)
{
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

// Lower-case letters of the script used for each fixture language.
std::vector<char32_t> alphabet(const LangCode& lang)
{
    std::vector<char32_t> letters;
    const auto range = [&](char32_t a, char32_t b) {
        for (char32_t c = a; c <= b; ++c) {
            letters.push_back(c);
        }
    };
    if (lang == "en") {
        range(U'a', U'z');
    } else if (lang == "el") {
        range(0x03B1, 0x03C1); // final sigma folds to sigma, so skip it
        range(0x03C3, 0x03C9);
    } else if (lang == "ru") {
        range(0x0430, 0x044F);
    } else if (lang == "hy") {
        range(0x0561, 0x0586);
    } else if (lang == "ka") {
        range(0x10D0, 0x10F0);
    } else {
        throw std::invalid_argument("no fixture script for " + lang);
    }
    return letters;
}

} // namespace

Corpus random_word_corpus(std::size_t docs, std::size_t vocab, std::size_t min_len,
                          std::size_t max_len, std::uint64_t seed, const LangCode& lang)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> len(min_len, max_len);
    std::vector<Document> out;
    for (std::size_t i = 0; i < docs; ++i) {
        out.push_back({fmt::format("d{:04}", i), lang, skewed_words(rng, vocab, len(rng)), {}});
    }
    return Corpus(std::move(out));
}

QuerySet random_word_queries(std::size_t n, std::size_t vocab, std::size_t len,
                             std::uint64_t seed, const LangCode& lang)
{
    std::mt19937_64 rng(seed);
    std::vector<Query> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back({fmt::format("q{:03}", i), lang, skewed_words(rng, vocab, len)});
    }
    return QuerySet(std::move(out));
}

ScriptFixture make_script_fixture(const ScriptFixtureOptions& o)
{
    std::mt19937_64 rng(o.seed);
    ScriptFixture fx;
    fx.languages = o.languages;

    // words[lang][concept], unique within each language
    std::map<LangCode, std::vector<std::string>> words;
    for (const auto& lang : o.languages) {
        const auto letters = alphabet(lang);
        std::uniform_int_distribution<std::size_t> pick(0, letters.size() - 1);
        std::uniform_int_distribution<std::size_t> len(4, 8);
        std::set<std::string> seen;
        auto& list = words[lang];
        while (list.size() < o.concepts) {
            std::string w;
            const std::size_t n = len(rng);
            for (std::size_t i = 0; i < n; ++i) {
                append_utf8(w, letters[pick(rng)]);
            }
            if (seen.insert(w).second) {
                list.push_back(w);
            }
        }
    }
    const LangCode& pivot = o.languages.front();
    for (const auto& lang : o.languages) {
        if (lang == pivot) {
            continue;
        }
        const auto cov = o.lexicon_coverage.find(lang);
        const double coverage = cov == o.lexicon_coverage.end() ? 1.0 : cov->second;
        // Own stream so coverage does not shift the rest of the fixture.
        std::uint64_t salt = o.seed;
        for (unsigned char ch : lang) {
            salt = salt * 131 + ch;
        }
        std::mt19937_64 keep_rng(salt);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (std::size_t c = 0; c < o.concepts; ++c) {
            if (u(keep_rng) < coverage) {
                fx.lexicon[words[lang][c]] = words[pivot][c];
            }
        }
    }

    std::uniform_int_distribution<std::size_t> pick_concept(0, o.concepts - 1);
    std::vector<Document> docs;
    std::map<LangCode, std::vector<std::vector<std::size_t>>> doc_concepts;
    for (const auto& lang : o.languages) {
        for (std::size_t i = 0; i < o.docs_per_language; ++i) {
            std::vector<std::size_t> cs;
            std::string text;
            for (std::size_t j = 0; j < o.concepts_per_doc; ++j) {
                cs.push_back(pick_concept(rng));
                text += (j ? " " : "") + words[lang][cs.back()];
            }
            docs.push_back({fmt::format("{}-d{:03}", lang, i), lang, text, {}});
            doc_concepts[lang].push_back(std::move(cs));
        }
    }
    fx.corpus = Corpus(std::move(docs));

    std::vector<Query> queries;
    std::vector<Judgment> judgments;
    std::uniform_int_distribution<std::size_t> which_doc(0, o.docs_per_language - 1);
    for (const auto& ql : o.languages) {
        for (const auto& dl : o.languages) {
            for (std::size_t i = 0; i < o.queries_per_pair; ++i) {
                const std::size_t d = which_doc(rng);
                auto cs = doc_concepts[dl][d];
                std::shuffle(cs.begin(), cs.end(), rng);
                std::string text;
                for (std::size_t j = 0; j < o.concepts_per_query && j < cs.size(); ++j) {
                    text += (j ? " " : "") + words[ql][cs[j]];
                }
                const std::string qid = fmt::format("q-{}-{}-{:03}", ql, dl, i);
                queries.push_back({qid, ql, text});
                judgments.push_back({qid, fmt::format("{}-d{:03}", dl, d), 1});
            }
        }
    }
    fx.queries = QuerySet(std::move(queries));
    fx.qrels = Judgments(std::move(judgments));
    return fx;
}

void write_script_fixture(const ScriptFixture& fx, const fs::path& dir)
{
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "corpus.jsonl", std::ios::binary);
        write_corpus(out, fx.corpus);
    }
    {
        std::ofstream out(dir / "queries.jsonl", std::ios::binary);
        write_queries(out, fx.queries);
    }
    {
        std::ofstream out(dir / "qrels.txt", std::ios::binary);
        write_qrels(out, fx.qrels);
    }
    std::ofstream out(dir / "lexicon.tsv", std::ios::binary);
    const std::map<std::string, std::string> sorted(fx.lexicon.begin(), fx.lexicon.end());
    for (const auto& [term, shared] : sorted) {
        out << term << '\t' << shared << '\n';
    }
}

int run_clir(const std::string& args, const fs::path& log)
{
    const std::string sink = log.empty() ? "/dev/null" : log.string();
    const std::string cmd = fmt::format("\"{}\" {} >>\"{}\" 2>&1", CLIR_BINARY, args, sink);
    const int status = std::system(cmd.c_str());
    if (status == -1 || !WIFEXITED(status)) {
        return -1;
    }
    return WEXITSTATUS(status);
}

} // namespace clir::test

namespace clir::test {

namespace {

std::uint64_t fnv(std::string_view s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace

void write_typology(const std::vector<LangCode>& languages, const fs::path& path)
{
    std::ofstream out(path, std::ios::binary);
    out << "# synthetic typology\n";
    for (const char* set : {"geographic", "syntax", "phonology", "inventory", "genealogical"}) {
        for (const auto& lang : languages) {
            std::string values;
            for (int i = 0; i < 8; ++i) {
                const auto h = fnv(lang + set + std::to_string(i));
                values += i ? ", " : "";
                // roughly one value in eight is missing
                values += h % 8 == 0 ? std::string("null") : fmt::format("{}", (h >> 8) % 5 / 4.0);
            }
            out << fmt::format(R"({{"lang": "{}", "feature_set": "{}", "values": [{}]}})", lang,
                               set, values)
                << '\n';
        }
    }
}

void write_fake_scores(const fs::path& requests, const Judgments& qrels, const fs::path& scores)
{
    std::ifstream in(requests, std::ios::binary);
    rerank::ScoreMap map;
    for (const auto& r : rerank::parse_scoring_requests(in, requests.string())) {
        const double noise = static_cast<double>(fnv(r.query_id + "|" + r.doc_id) % 1000) / 1e4;
        map[{r.query_id, r.doc_id}] = (qrels.grade(r.query_id, r.doc_id) > 0 ? 0.9 : 0.0) + noise;
    }
    std::ofstream out(scores, std::ios::binary);
    rerank::write_scores(out, map);
}

PipelineRun run_cli_pipeline(const ScriptFixture& fx, const fs::path& dir, std::uint64_t seed)
{
    PipelineRun result;
    const fs::path raw = dir / "raw";
    const fs::path out = dir / "out";
    write_script_fixture(fx, raw);
    fs::create_directories(out);
    write_typology(fx.languages, raw / "typology.jsonl");
    result.log = dir / "pipeline.log";

    const auto r = [&](const std::string& name) { return fmt::format("\"{}\"", (raw / name).string()); };
    const auto o = [&](const std::string& name) { return fmt::format("\"{}\"", (out / name).string()); };
    const auto keep = [&](std::initializer_list<const char*> names) {
        for (const char* n : names) {
            result.reproducible.push_back(out / n);
        }
    };
    std::string langs;
    for (const auto& l : fx.languages) {
        langs += (langs.empty() ? "" : ",") + l;
    }
    const std::size_t docs = fx.corpus.size();
    const std::string data = fmt::format("--queries {} --corpus {} --qrels {}", o("queries.jsonl"),
                                         o("corpus.jsonl"), o("qrels.txt"));

    const std::vector<std::pair<std::string, std::string>> steps = {
        {"ingest",
         fmt::format("ingest --corpus {} --out {} --queries {} --queries-out {} --qrels {} "
                     "--qrels-out {} --manifest {} --dataset synthetic --languages {} --sample 15",
                     r("corpus.jsonl"), o("corpus.jsonl"), r("queries.jsonl"), o("queries.jsonl"),
                     r("qrels.txt"), o("qrels.txt"), o("manifest.json"), langs)},
        {"index-bm25", fmt::format("index-bm25 --corpus {} --out {}", o("corpus.jsonl"), o("bm25.clxi"))},
        {"retrieve bm25", fmt::format("retrieve --method bm25 --index {} --queries {} --k 100 --out {}",
                                      o("bm25.clxi"), o("queries.jsonl"), o("bm25.run"))},
        {"toy-embed docs",
         fmt::format("toy-embed --input {} --kind docs --dim 256 --lexicon {} --out {} --ids-out {}",
                     o("corpus.jsonl"), r("lexicon.tsv"), o("docs.clre"), o("docs.ids"))},
        {"toy-embed queries",
         fmt::format("toy-embed --input {} --kind queries --dim 256 --lexicon {} --out {} --ids-out {}",
                     o("queries.jsonl"), r("lexicon.tsv"), o("queries.clre"), o("queries.ids"))},
        {"retrieve dense",
         fmt::format("retrieve --method dense --doc-embeddings {} --doc-ids {} --query-embeddings {} "
                     "--query-ids {} --k 100 --out {}",
                     o("docs.clre"), o("docs.ids"), o("queries.clre"), o("queries.ids"), o("dense.run"))},
        {"index-hnsw", fmt::format("index-hnsw --embeddings {} --ids {} --model toy --out {}",
                                   o("docs.clre"), o("docs.ids"), o("hnsw.clrh"))},
        {"retrieve ann",
         fmt::format("retrieve --method ann --index {} --query-embeddings {} --query-ids {} --k 100 "
                     "--ef {} --out {}",
                     o("hnsw.clrh"), o("queries.clre"), o("queries.ids"), docs, o("ann.run"))},
        {"make-candidates",
         fmt::format("make-candidates --run {} --qrels {} --out {} --requests-out {} --queries {} "
                     "--corpus {}",
                     o("bm25.run"), o("qrels.txt"), o("candidates.jsonl"), o("requests.jsonl"),
                     o("queries.jsonl"), o("corpus.jsonl"))},
        {"scores", ""},
        {"apply-scores", fmt::format("apply-scores --candidates {} --scores {} --out {} --tag rerank",
                                     o("candidates.jsonl"), o("scores.jsonl"), o("rerank.run"))},
        {"export-negatives easy",
         fmt::format("export-negatives --mode easy {} --m 3 --out {}", data, o("neg-easy.jsonl"))},
        {"export-negatives hard",
         fmt::format("export-negatives --mode hard {} --run {} --m 3 --out {}", data, o("bm25.run"),
                     o("neg-hard.jsonl"))},
    };
    const auto failed = [&](const std::string& name, int code) {
        result.failure = fmt::format("{}: exit {}", name, code);
        return result;
    };
    for (const auto& [name, args] : steps) {
        if (name == "scores") {
            write_fake_scores(out / "requests.jsonl", read_qrels(out / "qrels.txt"),
                              out / "scores.jsonl");
            continue;
        }
        if (int code = run_clir(fmt::format("--seed {} {}", seed, args), result.log); code != 0) {
            return failed(name, code);
        }
    }
    keep({"corpus.jsonl", "queries.jsonl", "qrels.txt", "manifest.json", "bm25.clxi", "bm25.run",
          "docs.clre", "docs.ids", "queries.clre", "queries.ids", "dense.run", "hnsw.clrh",
          "ann.run", "candidates.jsonl", "requests.jsonl", "rerank.run", "neg-easy.jsonl",
          "neg-hard.jsonl"});

    for (const char* run : {"bm25", "dense", "ann", "rerank"}) {
        const std::string args = fmt::format(
            "evaluate --run {} {} --k 1,10,100 --out {} --table {}", o(std::string(run) + ".run"),
            data, o(fmt::format("eval-{}.jsonl", run)), o(fmt::format("eval-{}.txt", run)));
        if (int code = run_clir(fmt::format("--seed {} {}", seed, args), result.log); code != 0) {
            return failed(fmt::format("evaluate {}", run), code);
        }
        result.reproducible.push_back(out / fmt::format("eval-{}.jsonl", run));
        result.reproducible.push_back(out / fmt::format("eval-{}.txt", run));
    }

    const std::vector<std::pair<std::string, std::string>> analysis = {
        {"analyze-bias", fmt::format("analyze-bias --run {} {} --out {}", o("dense.run"), data,
                                     o("bias.jsonl"))},
        {"analyze-lingsim",
         fmt::format("analyze-lingsim --report {} --typology {} --k 10 --model toy --dataset synthetic "
                     "--out {} --table {}",
                     o("eval-dense.jsonl"), r("typology.jsonl"), o("lingsim.jsonl"),
                     o("lingsim.txt"))},
        {"bench-latency",
         fmt::format("bench-latency --doc-embeddings {} --doc-ids {} --query-embeddings {} "
                     "--query-ids {} {} --index {} --out {} --table {}",
                     o("docs.clre"), o("docs.ids"), o("queries.clre"), o("queries.ids"), data,
                     o("hnsw.clrh"), o("latency.jsonl"), o("latency.txt"))},
    };
    for (const auto& [name, args] : analysis) {
        if (int code = run_clir(fmt::format("--seed {} {}", seed, args), result.log); code != 0) {
            return failed(name, code);
        }
    }
    keep({"bias.jsonl", "lingsim.jsonl", "lingsim.txt"});
    return result;
}

} // namespace clir::test
