// clir: command-line front end for the retrieval evaluation toolkit.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "clir/analysis.hpp"
#include "clir/bm25.hpp"
#include "clir/corpus.hpp"
#include "clir/dense_search.hpp"
#include "clir/embedding.hpp"
#include "clir/error.hpp"
#include "clir/hnsw.hpp"
#include "clir/language.hpp"
#include "clir/latency.hpp"
#include "clir/metrics.hpp"
#include "clir/rerank.hpp"
#include "clir/run.hpp"

namespace fs = std::filesystem;

namespace {

using namespace clir;

constexpr const char* kFormats = R"(File formats:
  corpus, queries    JSONL, one object per line ('#' lines are comments)
  qrels              TREC: qid 0 docid grade
  run                TREC: qid Q0 docid rank score tag
  embeddings         CLRE v1 (32-byte header, little-endian f32 rows) + ids text file
  bm25 index         CLXI v1 (little-endian, CRC32 trailer)
  hnsw index         CLRH v1 (little-endian, CRC32 trailer)
  reports            JSONL records, optional aligned text table
Options may also come from a TOML/INI file given with --config; [section]
names match subcommands and command-line flags take precedence.
Exit codes: 0 ok, 1 usage error, 2 data error, 3 internal error.)";

std::ofstream open_out(const std::string& path)
{
    if (const auto parent = fs::path(path).parent_path(); !parent.empty()) {
        fs::create_directories(parent);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError(fmt::format("cannot open '{}' for writing", path));
    }
    return out;
}

std::ifstream open_in(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError(fmt::format("cannot open '{}'", path));
    }
    return in;
}

void write_header(std::ostream& out, const std::vector<std::string>& lines)
{
    for (const auto& line : lines) {
        out << "# " << line << '\n';
    }
}

LanguageSet language_set(const std::vector<std::string>& langs)
{
    LanguageSet set;
    for (const auto& l : langs) {
        if (!is_iso639_1(l)) {
            throw UsageError(fmt::format("'{}' is not an ISO 639-1 code", l));
        }
        set.allowed.insert(l);
    }
    return set;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label)
{
    std::uint64_t h = 1469598103934665603ull ^ seed;
    for (const char c : label) {
        h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ull;
    }
    return h;
}

// Common to every subcommand.
struct Global {
    std::uint64_t seed = 42;
};

// ---------------------------------------------------------------- ingest

struct IngestOpts {
    std::string corpus, out, queries, queries_out, qrels, qrels_out, manifest;
    std::string dataset = "custom";
    std::vector<std::string> languages;
    bool dedupe = false;
    std::string dedupe_field = "original";
    std::size_t truncate = 512;
    std::size_t sample = 0;
    int depth = 100;
};

void run_ingest(const IngestOpts& o, const Global& g)
{
    std::vector<std::string> langs = o.languages;
    if (langs.empty() && o.dataset != "custom") {
        langs = dataset_preset(o.dataset).languages;
    }
    const LanguageSet accepted = language_set(langs);

    Corpus corpus = read_corpus(o.corpus, accepted);
    if (o.dedupe) {
        std::vector<LangCode> targets = langs;
        if (targets.empty()) {
            for (const auto& [lang, n] : corpus.language_counts()) {
                targets.push_back(lang);
            }
        }
        corpus = dedupe_and_rebalance(corpus, targets, g.seed, parse_text_field(o.dedupe_field));
    }
    if (o.truncate > 0) {
        corpus = truncate_corpus(corpus, o.truncate);
    }

    const std::string params =
        fmt::format("clir ingest dataset={} seed={} dedupe={} truncate={}", o.dataset, g.seed,
                    o.dedupe ? "yes" : "no", o.truncate);
    {
        auto out = open_out(o.out);
        write_header(out, {params});
        write_corpus(out, corpus);
    }

    if (!o.queries.empty()) {
        QuerySet queries = read_queries(o.queries, accepted);
        std::optional<Judgments> qrels;
        if (!o.qrels.empty()) {
            qrels = read_qrels(o.qrels);
        }
        if (o.sample > 0) {
            if (!qrels) {
                throw UsageError("--sample needs --qrels to assign queries to language pairs");
            }
            std::vector<Query> picked;
            for (const auto& [pair, pool] : pair_pools(queries, *qrels, corpus)) {
                const QuerySet s =
                    sample_queries(pool, pair, o.sample, derive_seed(g.seed, pair.label()));
                picked.insert(picked.end(), s.queries().begin(), s.queries().end());
            }
            queries = QuerySet(std::move(picked));
        }
        if (o.queries_out.empty()) {
            throw UsageError("--queries needs --queries-out");
        }
        auto out = open_out(o.queries_out);
        write_header(out, {params});
        write_queries(out, queries);

        if (qrels && !o.qrels_out.empty()) {
            std::vector<Judgment> kept;
            for (const auto& j : qrels->all()) {
                if (queries.find(j.query_id) != nullptr && corpus.find(j.doc_id) != nullptr) {
                    kept.push_back(j);
                }
            }
            auto qout = open_out(o.qrels_out);
            write_qrels(qout, Judgments(std::move(kept)));
        }
    }

    if (!o.manifest.empty()) {
        auto out = open_out(o.manifest);
        write_manifest(out, make_manifest(o.dataset, corpus, o.depth,
                                          static_cast<int>(o.truncate), g.seed));
    }
    std::cerr << fmt::format("ingest: {} documents\n", corpus.size());
}

// ------------------------------------------------------------ index-bm25

struct IndexBm25Opts {
    std::string corpus, out, field = "original";
    double k1 = 1.2, b = 0.75;
};

void run_index_bm25(const IndexBm25Opts& o)
{
    const Corpus corpus = read_corpus(o.corpus);
    const auto index = lexical::build_index(corpus, parse_text_field(o.field), {o.k1, o.b});
    lexical::save_index(index, o.out);
    std::cerr << fmt::format("index-bm25: {} documents, {} terms\n", index.doc_count(),
                             index.postings().size());
}

// ------------------------------------------------------------ index-hnsw

struct IndexHnswOpts {
    std::string embeddings, ids, out, model, selection = "simple";
    std::size_t M = 16, ef_construction = 200, ef_search = 0;
    double level_multiplier = 0.0;
    bool narrow_base = false;
};

ann::NeighborSelection parse_selection(const std::string& s)
{
    if (s == "simple") {
        return ann::NeighborSelection::simple;
    }
    if (s == "heuristic") {
        return ann::NeighborSelection::heuristic;
    }
    throw UsageError(fmt::format("unknown neighbor selection '{}'", s));
}

void run_index_hnsw(const IndexHnswOpts& o, const Global& g)
{
    const auto docs = dense::load_embeddings(o.embeddings, o.ids);
    ann::HnswParams p;
    p.M = o.M;
    p.ef_construction = o.ef_construction;
    p.ef_search = o.ef_search;
    p.level_multiplier = o.level_multiplier;
    p.selection = parse_selection(o.selection);
    p.wide_base_links = !o.narrow_base;
    const auto index = ann::HnswIndex::build(docs.matrix, docs.ids, p, g.seed, o.model);
    index.save(o.out);
    std::cerr << fmt::format("index-hnsw: {} vectors, dim {}, {} levels\n", index.size(),
                             index.dim(), index.max_level() + 1);
}

// -------------------------------------------------------------- retrieve

struct RetrieveOpts {
    std::string method = "bm25", out, tag;
    std::string index, queries;
    std::string doc_embeddings, doc_ids, query_embeddings, query_ids;
    std::size_t k = 100, ef = 0, block = dense::kDefaultQueryBlock;
};

void run_retrieve(const RetrieveOpts& o, const Global& g)
{
    const std::string tag = o.tag.empty() ? o.method : o.tag;
    RunList run;
    std::string params;
    if (o.method == "bm25") {
        const auto index = lexical::load_index(o.index);
        const QuerySet queries = read_queries(o.queries);
        run = lexical::bm25_search_all(index, queries, o.k, tag);
        params = fmt::format("k1={} b={} field={}", index.params().k1, index.params().b,
                             to_string(index.field()));
    } else if (o.method == "dense") {
        const auto docs = dense::load_embeddings(o.doc_embeddings, o.doc_ids);
        const auto queries = dense::load_embeddings(o.query_embeddings, o.query_ids);
        run = dense::to_run(dense::exact_topk(queries.matrix, docs.matrix, o.k, o.block),
                            queries.ids, docs.ids, tag);
        params = fmt::format("dim={}", docs.matrix.dim());
    } else if (o.method == "ann") {
        const auto index = ann::HnswIndex::load(o.index);
        const auto queries = dense::load_embeddings(o.query_embeddings, o.query_ids);
        const std::size_t ef = o.ef != 0 ? o.ef : index.params().ef_for(o.k);
        run = dense::to_run(index.search_all(queries.matrix, o.k, ef), queries.ids, index.ids(),
                            tag);
        params = fmt::format("M={} ef_construction={} ef={} build_seed={}", index.params().M,
                             index.params().ef_construction, ef, index.seed());
    } else {
        throw UsageError(fmt::format("unknown method '{}' (bm25, dense, ann)", o.method));
    }
    write_trec_run(o.out, run,
                   {fmt::format("clir retrieve method={} k={} seed={} {}", o.method, o.k, g.seed,
                                params)});
}

// ------------------------------------------------------- make-candidates

struct CandidatesOpts {
    std::string run, qrels, out, requests_out, queries, corpus, field = "original";
    std::size_t depth = rerank::kDefaultDepth;
    int min_grade = 1;
};

void run_make_candidates(const CandidatesOpts& o, const Global& g)
{
    const RunList run = read_trec_run(o.run);
    const Judgments qrels = read_qrels(o.qrels);
    const auto sets = rerank::make_candidates(run, qrels, o.depth, o.min_grade);
    {
        auto out = open_out(o.out);
        write_header(out, {fmt::format("clir make-candidates depth={} seed={}", o.depth, g.seed)});
        rerank::write_candidates(out, sets);
    }
    if (!o.requests_out.empty()) {
        if (o.queries.empty() || o.corpus.empty()) {
            throw UsageError("--requests-out needs --queries and --corpus");
        }
        const auto requests = rerank::scoring_requests(sets, read_queries(o.queries),
                                                       read_corpus(o.corpus),
                                                       parse_text_field(o.field));
        auto out = open_out(o.requests_out);
        rerank::write_scoring_requests(out, requests);
    }
    std::size_t injected = 0;
    for (const auto& s : sets) {
        injected += s.injected.has_value() ? 1 : 0;
    }
    std::cerr << fmt::format("make-candidates: {} queries, {} with injected gold\n", sets.size(),
                             injected);
}

// ------------------------------------------------------ export-negatives

struct NegativesOpts {
    std::string mode = "easy", queries, corpus, qrels, run, out, field = "original";
    std::size_t m = 1;
    int min_grade = 1;
};

void run_export_negatives(const NegativesOpts& o, const Global& g)
{
    const auto mode = rerank::parse_negative_mode(o.mode);
    std::optional<RunList> first_stage;
    if (!o.run.empty()) {
        first_stage = read_trec_run(o.run);
    } else if (mode == rerank::NegativeMode::hard) {
        throw UsageError("--mode hard needs --run");
    }
    const auto pairs = rerank::build_training_pairs(
        read_queries(o.queries), read_qrels(o.qrels), read_corpus(o.corpus),
        first_stage ? &*first_stage : nullptr, mode, o.m, g.seed, parse_text_field(o.field),
        o.min_grade);
    auto out = open_out(o.out);
    write_header(out, {fmt::format("clir export-negatives mode={} m={} seed={}", o.mode, o.m,
                                   g.seed)});
    rerank::write_training_pairs(out, pairs);
}

// ---------------------------------------------------------- apply-scores

struct ApplyOpts {
    std::string candidates, scores, out, tag = "rerank";
};

void run_apply_scores(const ApplyOpts& o, const Global& g)
{
    auto in = open_in(o.candidates);
    const auto sets = rerank::parse_candidates(in, o.candidates);
    const auto scores = rerank::read_scores(o.scores);
    RunList run(o.tag);
    for (const auto& s : sets) {
        run.add(rerank::apply_external_scores(s, scores));
    }
    write_trec_run(o.out, run, {fmt::format("clir apply-scores tag={} seed={}", o.tag, g.seed)});
}

// -------------------------------------------------------------- evaluate

struct EvaluateOpts {
    std::string run, qrels, queries, corpus, out, table;
    std::vector<std::size_t> ks = {10, 100};
    int min_grade = 1;
};

void run_evaluate(const EvaluateOpts& o, const Global& g)
{
    const RunList run = read_trec_run(o.run);
    const Judgments qrels = read_qrels(o.qrels);
    const auto pairs =
        query_pairs(read_queries(o.queries), qrels, read_corpus(o.corpus), o.min_grade);
    const auto report = eval::evaluate(run, qrels, pairs, {o.ks, o.min_grade});
    {
        auto out = open_out(o.out);
        eval::write_report_records(out, report, {fmt::format("clir evaluate tag={} seed={}", run.tag(), g.seed)});
    }
    if (!o.table.empty()) {
        auto out = open_out(o.table);
        eval::write_report_table(out, report);
    } else {
        eval::write_report_table(std::cout, report);
    }
}

// ----------------------------------------------------------- analyze-bias

struct BiasOpts {
    std::string run, queries, corpus, qrels, out;
    std::size_t depth = 1;
    int min_grade = 1;
};

void run_analyze_bias(const BiasOpts& o, const Global& g)
{
    const RunList run = read_trec_run(o.run);
    const QuerySet queries = read_queries(o.queries);
    const Corpus corpus = read_corpus(o.corpus);
    const Judgments qrels = read_qrels(o.qrels);
    const auto rate = analysis::same_language_rate(run, queries, corpus, o.depth);
    const auto dist = analysis::retrieved_language_distribution(run, queries, corpus, qrels,
                                                                o.depth, o.min_grade);
    auto out = open_out(o.out);
    analysis::write_bias_records(
        out, rate, dist, {fmt::format("clir analyze-bias tag={} depth={} seed={}", run.tag(), o.depth, g.seed)});
}

// -------------------------------------------------------- analyze-lingsim

struct LingsimOpts {
    std::string report, typology, out, table, model = "model", dataset = "dataset";
    std::vector<std::string> feature_sets;
    std::size_t k = 100;
    bool include_same_language = false;
};

void run_analyze_lingsim(const LingsimOpts& o, const Global& g)
{
    auto in = open_in(o.report);
    const auto recall = eval::read_pair_recall(in, o.k, o.report);
    const auto typology = analysis::read_typology(o.typology);

    std::vector<analysis::FeatureSet> sets;
    if (o.feature_sets.empty()) {
        sets.assign(std::begin(analysis::kAllFeatureSets), std::end(analysis::kAllFeatureSets));
    } else {
        for (const auto& name : o.feature_sets) {
            sets.push_back(analysis::parse_feature_set(name));
        }
    }
    const analysis::CorrelationOptions opts{!o.include_same_language};

    std::vector<analysis::CorrelationRow> rows;
    for (const auto set : sets) {
        try {
            auto row = analysis::correlate_similarity_with_performance(recall, typology, set, opts);
            row.model = o.model;
            row.dataset = o.dataset;
            rows.push_back(std::move(row));
        } catch (const DataError& e) {
            analysis::CorrelationRow row;
            row.model = o.model;
            row.dataset = o.dataset;
            row.feature_set = set;
            row.error = e.what();
            rows.push_back(std::move(row));
        }
    }
    {
        auto out = open_out(o.out);
        analysis::write_correlation_records(
            out, rows, {fmt::format("clir analyze-lingsim k={} seed={} same_language={}", o.k, g.seed,
                                    o.include_same_language ? "included" : "excluded")});
    }
    if (!o.table.empty()) {
        auto out = open_out(o.table);
        analysis::write_correlation_table(out, rows);
    } else {
        analysis::write_correlation_table(std::cout, rows);
    }
}

// --------------------------------------------------------- bench-latency

struct LatencyOpts {
    std::string doc_embeddings, doc_ids, query_embeddings, query_ids, queries, corpus, qrels;
    std::string index, out, table, mode = "per-pair", dataset = "custom";
    int pair_count = 0;
    std::size_t k = 100, ef = 0;
    bool no_warmup = false;
};

void run_bench_latency(const LatencyOpts& o, const Global& g)
{
    const auto docs = dense::load_embeddings(o.doc_embeddings, o.doc_ids);
    const auto query_vecs = dense::load_embeddings(o.query_embeddings, o.query_ids);
    const QuerySet queries = read_queries(o.queries);
    const Judgments qrels = read_qrels(o.qrels);
    const Corpus corpus = read_corpus(o.corpus);

    int pair_count = o.pair_count;
    if (pair_count == 0 && o.dataset != "custom") {
        pair_count = dataset_preset(o.dataset).pair_count;
    }

    std::vector<bench::PairWorkload> workloads;
    for (const auto& [pair, pool] : pair_pools(queries, qrels, corpus)) {
        std::vector<std::size_t> rows;
        std::vector<std::string> ids;
        for (const auto& q : pool.queries()) {
            if (!query_vecs.ids.contains(q.query_id)) {
                throw DataError(fmt::format("query '{}' has no embedding", q.query_id));
            }
            rows.push_back(query_vecs.ids.row_of(q.query_id));
            ids.push_back(q.query_id);
        }
        workloads.push_back({pair, query_vecs.matrix.select_rows(rows), dense::IdMap(ids)});
    }
    if (pair_count == 0) {
        pair_count = static_cast<int>(workloads.size());
    }

    const bench::Engine exact = [&](const bench::PairWorkload& w) {
        return dense::to_run(dense::exact_topk(w.queries, docs.matrix, o.k), w.query_ids,
                             docs.ids, "dense");
    };
    std::optional<ann::HnswIndex> shared;
    if (o.mode == "shared") {
        shared = ann::HnswIndex::load(o.index);
    } else if (o.mode != "per-pair") {
        throw UsageError(fmt::format("unknown mode '{}' (shared, per-pair)", o.mode));
    }
    const bench::Engine approx = [&](const bench::PairWorkload& w) {
        const auto search = [&](const ann::HnswIndex& index) {
            const std::size_t ef = o.ef != 0 ? o.ef : index.params().ef_for(o.k);
            return dense::to_run(index.search_all(w.queries, o.k, ef), w.query_ids, index.ids(),
                                 "ann");
        };
        if (shared) {
            return search(*shared);
        }
        return search(ann::HnswIndex::load(o.index));
    };

    const auto result = bench::run_interleaved(workloads, exact, approx, pair_count, !o.no_warmup);
    const auto report = bench::normalize_and_summarize(result.trace);

    RunList exact_all("dense"), ann_all("ann");
    for (const auto& r : result.exact_runs) {
        for (const auto& q : r.results()) {
            exact_all.add(q);
        }
    }
    for (const auto& r : result.ann_runs) {
        for (const auto& q : r.results()) {
            ann_all.add(q);
        }
    }
    bench::RecallComparison cmp;
    cmp.k = o.k;
    cmp.ann_overlap = bench::mean_overlap(exact_all, ann_all, o.k);
    const auto pairs = query_pairs(queries, qrels, corpus);
    const auto micro = [&](const RunList& run) {
        return eval::evaluate(run, qrels, pairs, {{o.k}, 1}).micro_recall.at(o.k);
    };
    cmp.exact_recall = micro(exact_all);
    cmp.ann_recall = micro(ann_all);

    {
        auto out = open_out(o.out);
        bench::write_latency_records(
            out, o.dataset, report, cmp,
            {fmt::format("clir bench-latency mode={} k={} pairs={} seed={}", o.mode, o.k, pair_count, g.seed)});
    }
    if (!o.table.empty()) {
        auto out = open_out(o.table);
        bench::write_latency_table(out, o.dataset, report, cmp);
    } else {
        bench::write_latency_table(std::cout, o.dataset, report, cmp);
    }
}

// ------------------------------------------------------------- toy-embed

struct ToyEmbedOpts {
    std::string input, kind = "docs", field = "original", lexicon, out, ids_out;
    std::size_t dim = 256;
};

void run_toy_embed(const ToyEmbedOpts& o, const Global& g)
{
    std::vector<std::string> ids, texts;
    if (o.kind == "docs") {
        const Corpus corpus = read_corpus(o.input);
        const TextField field = parse_text_field(o.field);
        for (const auto& d : corpus.documents()) {
            ids.push_back(d.doc_id);
            texts.push_back(field_text(d, field));
        }
    } else if (o.kind == "queries") {
        const QuerySet queries = read_queries(o.input);
        for (const auto& q : queries.queries()) {
            ids.push_back(q.query_id);
            texts.push_back(q.text);
        }
    } else {
        throw UsageError(fmt::format("unknown kind '{}' (docs, queries)", o.kind));
    }
    std::optional<dense::AlignmentLexicon> lexicon;
    if (!o.lexicon.empty()) {
        lexicon = dense::read_lexicon(o.lexicon);
    }
    const auto matrix = dense::toy_embed(texts, o.dim, g.seed, lexicon ? &*lexicon : nullptr);
    dense::save_embeddings(matrix, dense::IdMap(std::move(ids)), o.out, o.ids_out);
}

int exit_code_for_parse(const CLI::ParseError& e)
{
    return e.get_exit_code() == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Cross-language retrieval evaluation toolkit", "clir"};
    app.footer(kFormats);
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a TOML/INI file");

    Global g;
    app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str();

    std::function<void()> action;

    IngestOpts ingest;
    {
        auto* c = app.add_subcommand("ingest", "Validate, deduplicate, truncate and sample data");
        c->add_option("--corpus", ingest.corpus, "Input corpus JSONL")->required()->check(CLI::ExistingFile);
        c->add_option("--out", ingest.out, "Output corpus JSONL")->required();
        c->add_option("--queries", ingest.queries, "Input queries JSONL")->check(CLI::ExistingFile);
        c->add_option("--queries-out", ingest.queries_out, "Output queries JSONL");
        c->add_option("--qrels", ingest.qrels, "Input qrels")->check(CLI::ExistingFile);
        c->add_option("--qrels-out", ingest.qrels_out, "Output qrels restricted to kept data");
        c->add_option("--manifest", ingest.manifest, "Write a JSON manifest");
        c->add_option("--dataset", ingest.dataset, "Dataset name or preset")->capture_default_str();
        c->add_option("--languages", ingest.languages, "Accepted languages")->delimiter(',');
        c->add_flag("--dedupe", ingest.dedupe, "Deduplicate and rebalance languages");
        c->add_option("--dedupe-field", ingest.dedupe_field, "Key field for deduplication")
            ->capture_default_str();
        c->add_option("--truncate", ingest.truncate, "Term budget per document, 0 disables")
            ->capture_default_str();
        c->add_option("--sample", ingest.sample, "Queries sampled per language pair");
        c->add_option("--depth", ingest.depth, "Retrieval depth recorded in the manifest")
            ->capture_default_str();
        c->callback([&] { action = [&] { run_ingest(ingest, g); }; });
    }

    IndexBm25Opts bm25;
    {
        auto* c = app.add_subcommand("index-bm25", "Build a BM25 inverted index");
        c->add_option("--corpus", bm25.corpus)->required()->check(CLI::ExistingFile);
        c->add_option("--out", bm25.out, "Index file (CLXI)")->required();
        c->add_option("--field", bm25.field, "original or translated")->capture_default_str();
        c->add_option("--k1", bm25.k1)->capture_default_str();
        c->add_option("--b", bm25.b)->capture_default_str();
        c->callback([&] { action = [&] { run_index_bm25(bm25); }; });
    }

    IndexHnswOpts hnsw;
    {
        auto* c = app.add_subcommand("index-hnsw", "Build an HNSW graph over document embeddings");
        c->add_option("--embeddings", hnsw.embeddings, "Document matrix (CLRE)")->required()->check(CLI::ExistingFile);
        c->add_option("--ids", hnsw.ids, "Document ids, one per line")->required()->check(CLI::ExistingFile);
        c->add_option("--out", hnsw.out, "Index file (CLRH)")->required();
        c->add_option("--model", hnsw.model, "Encoder name stored in the index");
        c->add_option("--M", hnsw.M)->capture_default_str();
        c->add_option("--ef-construction", hnsw.ef_construction)->capture_default_str();
        c->add_option("--ef-search", hnsw.ef_search, "0 means max(50, 2k)")->capture_default_str();
        c->add_option("--level-multiplier", hnsw.level_multiplier, "0 means 1/ln(M)");
        c->add_option("--selection", hnsw.selection, "simple or heuristic")->capture_default_str();
        c->add_flag("--narrow-base", hnsw.narrow_base, "Link new nodes to M (not 2M) on layer 0");
        c->callback([&] { action = [&] { run_index_hnsw(hnsw, g); }; });
    }

    RetrieveOpts ret;
    {
        auto* c = app.add_subcommand("retrieve", "Rank documents for every query");
        c->add_option("--method", ret.method, "bm25, dense or ann")->capture_default_str();
        c->add_option("--out", ret.out, "Run file")->required();
        c->add_option("--tag", ret.tag, "Run tag, defaults to the method");
        c->add_option("--k", ret.k)->capture_default_str();
        c->add_option("--index", ret.index, "CLXI for bm25, CLRH for ann")->check(CLI::ExistingFile);
        c->add_option("--queries", ret.queries, "Queries JSONL (bm25)")->check(CLI::ExistingFile);
        c->add_option("--doc-embeddings", ret.doc_embeddings)->check(CLI::ExistingFile);
        c->add_option("--doc-ids", ret.doc_ids)->check(CLI::ExistingFile);
        c->add_option("--query-embeddings", ret.query_embeddings)->check(CLI::ExistingFile);
        c->add_option("--query-ids", ret.query_ids)->check(CLI::ExistingFile);
        c->add_option("--ef", ret.ef, "0 uses the index setting");
        c->add_option("--block", ret.block, "Query block size for dense search");
        c->callback([&] { action = [&] { run_retrieve(ret, g); }; });
    }

    CandidatesOpts cand;
    {
        auto* c = app.add_subcommand("make-candidates",
                                     "Cut a first-stage run to depth and inject gold documents");
        c->add_option("--run", cand.run)->required()->check(CLI::ExistingFile);
        c->add_option("--qrels", cand.qrels)->required()->check(CLI::ExistingFile);
        c->add_option("--out", cand.out, "Candidate sets JSONL")->required();
        c->add_option("--depth", cand.depth)->capture_default_str();
        c->add_option("--min-grade", cand.min_grade)->capture_default_str();
        c->add_option("--requests-out", cand.requests_out, "Scoring requests for the encoder");
        c->add_option("--queries", cand.queries)->check(CLI::ExistingFile);
        c->add_option("--corpus", cand.corpus)->check(CLI::ExistingFile);
        c->add_option("--field", cand.field)->capture_default_str();
        c->callback([&] { action = [&] { run_make_candidates(cand, g); }; });
    }

    NegativesOpts neg;
    {
        auto* c = app.add_subcommand("export-negatives", "Export training pairs with negatives");
        c->add_option("--mode", neg.mode, "easy or hard")->capture_default_str();
        c->add_option("--queries", neg.queries)->required()->check(CLI::ExistingFile);
        c->add_option("--corpus", neg.corpus)->required()->check(CLI::ExistingFile);
        c->add_option("--qrels", neg.qrels)->required()->check(CLI::ExistingFile);
        c->add_option("--run", neg.run, "First-stage run (required for hard)")->check(CLI::ExistingFile);
        c->add_option("--out", neg.out)->required();
        c->add_option("--m", neg.m, "Negatives per positive")->capture_default_str();
        c->add_option("--field", neg.field)->capture_default_str();
        c->add_option("--min-grade", neg.min_grade)->capture_default_str();
        c->callback([&] { action = [&] { run_export_negatives(neg, g); }; });
    }

    ApplyOpts apply;
    {
        auto* c = app.add_subcommand("apply-scores", "Re-rank candidates with external scores");
        c->add_option("--candidates", apply.candidates)->required()->check(CLI::ExistingFile);
        c->add_option("--scores", apply.scores)->required()->check(CLI::ExistingFile);
        c->add_option("--out", apply.out)->required();
        c->add_option("--tag", apply.tag)->capture_default_str();
        c->callback([&] { action = [&] { run_apply_scores(apply, g); }; });
    }

    EvaluateOpts ev;
    {
        auto* c = app.add_subcommand("evaluate", "Recall@k and nDCG@k per language pair");
        c->add_option("--run", ev.run)->required()->check(CLI::ExistingFile);
        c->add_option("--qrels", ev.qrels)->required()->check(CLI::ExistingFile);
        c->add_option("--queries", ev.queries)->required()->check(CLI::ExistingFile);
        c->add_option("--corpus", ev.corpus)->required()->check(CLI::ExistingFile);
        c->add_option("--out", ev.out, "Report JSONL")->required();
        c->add_option("--table", ev.table, "Text table (stdout if omitted)");
        c->add_option("--k", ev.ks, "Cutoffs")->delimiter(',')->capture_default_str();
        c->add_option("--min-grade", ev.min_grade)->capture_default_str();
        c->callback([&] { action = [&] { run_evaluate(ev, g); }; });
    }

    BiasOpts bias;
    {
        auto* c = app.add_subcommand("analyze-bias", "Same-language rate and language shares");
        c->add_option("--run", bias.run)->required()->check(CLI::ExistingFile);
        c->add_option("--queries", bias.queries)->required()->check(CLI::ExistingFile);
        c->add_option("--corpus", bias.corpus)->required()->check(CLI::ExistingFile);
        c->add_option("--qrels", bias.qrels)->required()->check(CLI::ExistingFile);
        c->add_option("--out", bias.out)->required();
        c->add_option("--depth", bias.depth)->capture_default_str();
        c->add_option("--min-grade", bias.min_grade)->capture_default_str();
        c->callback([&] { action = [&] { run_analyze_bias(bias, g); }; });
    }

    LingsimOpts ling;
    {
        auto* c = app.add_subcommand("analyze-lingsim",
                                     "Correlate typological similarity with recall");
        c->add_option("--report", ling.report, "Report JSONL from evaluate")->required()->check(CLI::ExistingFile);
        c->add_option("--typology", ling.typology, "Typological vectors JSONL")->required()->check(CLI::ExistingFile);
        c->add_option("--out", ling.out)->required();
        c->add_option("--table", ling.table);
        c->add_option("--k", ling.k)->capture_default_str();
        c->add_option("--feature-sets", ling.feature_sets)->delimiter(',');
        c->add_option("--model", ling.model)->capture_default_str();
        c->add_option("--dataset", ling.dataset)->capture_default_str();
        c->add_flag("--include-same-language", ling.include_same_language);
        c->callback([&] { action = [&] { run_analyze_lingsim(ling, g); }; });
    }

    LatencyOpts lat;
    {
        auto* c = app.add_subcommand("bench-latency", "Interleaved exact vs ANN latency");
        c->add_option("--doc-embeddings", lat.doc_embeddings)->required()->check(CLI::ExistingFile);
        c->add_option("--doc-ids", lat.doc_ids)->required()->check(CLI::ExistingFile);
        c->add_option("--query-embeddings", lat.query_embeddings)->required()->check(CLI::ExistingFile);
        c->add_option("--query-ids", lat.query_ids)->required()->check(CLI::ExistingFile);
        c->add_option("--queries", lat.queries)->required()->check(CLI::ExistingFile);
        c->add_option("--corpus", lat.corpus)->required()->check(CLI::ExistingFile);
        c->add_option("--qrels", lat.qrels)->required()->check(CLI::ExistingFile);
        c->add_option("--index", lat.index, "HNSW index (CLRH)")->required()->check(CLI::ExistingFile);
        c->add_option("--out", lat.out)->required();
        c->add_option("--table", lat.table);
        c->add_option("--mode", lat.mode, "shared or per-pair")->capture_default_str();
        c->add_option("--dataset", lat.dataset, "Dataset preset")->capture_default_str();
        c->add_option("--pair-count", lat.pair_count, "Overrides the preset pair count");
        c->add_option("--k", lat.k)->capture_default_str();
        c->add_option("--ef", lat.ef, "0 uses the index setting");
        c->add_flag("--no-warmup", lat.no_warmup);
        c->callback([&] { action = [&] { run_bench_latency(lat, g); }; });
    }

    ToyEmbedOpts toy;
    {
        auto* c = app.add_subcommand("toy-embed", "Deterministic hashed bag-of-words embeddings");
        c->add_option("--input", toy.input, "Corpus or queries JSONL")->required()->check(CLI::ExistingFile);
        c->add_option("--kind", toy.kind, "docs or queries")->capture_default_str();
        c->add_option("--field", toy.field)->capture_default_str();
        c->add_option("--dim", toy.dim)->capture_default_str();
        c->add_option("--lexicon", toy.lexicon, "TSV term<TAB>shared token")->check(CLI::ExistingFile);
        c->add_option("--out", toy.out, "Matrix (CLRE)")->required();
        c->add_option("--ids-out", toy.ids_out)->required();
        c->callback([&] { action = [&] { run_toy_embed(toy, g); }; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_code_for_parse(e);
    }

    try {
        action();
        return 0;
    } catch (const UsageError& e) {
        std::cerr << "clir: usage error: " << e.what() << '\n';
        return 1;
    } catch (const DataError& e) {
        std::cerr << "clir: data error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "clir: internal error: " << e.what() << '\n';
        return 3;
    }
}
