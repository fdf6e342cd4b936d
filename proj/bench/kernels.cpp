// Serial reference kernels against their OpenMP counterparts.
//
//   ./clir_bench --benchmark_filter=Exact

#include <benchmark/benchmark.h>
#include <fmt/format.h>
#include <omp.h>

#include <random>

#include "clir/bm25.hpp"
#include "clir/dense_search.hpp"
#include "clir/hnsw.hpp"

using namespace clir;

namespace {

dense::EmbeddingMatrix unit_rows(std::size_t rows, std::size_t dim, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> g;
    std::vector<float> data(rows * dim);
    for (auto& v : data) {
        v = g(rng);
    }
    dense::EmbeddingMatrix m(rows, dim, std::move(data));
    dense::l2_normalize(m);
    return m;
}

std::vector<std::string> word_texts(std::size_t n, std::size_t len, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) {
        std::string t;
        for (std::size_t w = 0; w < len; ++w) {
            t += fmt::format("w{} ", rng() % 5000);
        }
        out.push_back(std::move(t));
    }
    return out;
}

dense::IdMap ids(std::size_t n)
{
    std::vector<std::string> v;
    for (std::size_t i = 0; i < n; ++i) {
        v.push_back(fmt::format("d{}", i));
    }
    return dense::IdMap(std::move(v));
}

const dense::EmbeddingMatrix& docs()
{
    static const auto m = unit_rows(20000, 128, 1);
    return m;
}

const dense::EmbeddingMatrix& queries()
{
    static const auto m = unit_rows(256, 128, 2);
    return m;
}

const ann::HnswIndex& hnsw()
{
    static const auto index = ann::HnswIndex::build(docs(), ids(docs().rows()), {}, 3);
    return index;
}

const lexical::InvertedIndex& bm25_index()
{
    static const auto index = [] {
        std::vector<Document> d;
        const auto texts = word_texts(20000, 80, 4);
        for (std::size_t i = 0; i < texts.size(); ++i) {
            d.push_back({fmt::format("d{}", i), "en", texts[i], {}});
        }
        return lexical::build_index(Corpus(std::move(d)));
    }();
    return index;
}

const QuerySet& bm25_queries()
{
    static const QuerySet qs = [] {
        std::vector<Query> q;
        const auto texts = word_texts(500, 6, 5);
        for (std::size_t i = 0; i < texts.size(); ++i) {
            q.push_back({fmt::format("q{}", i), "en", texts[i]});
        }
        return QuerySet(std::move(q));
    }();
    return qs;
}

void ExactSerial(benchmark::State& state)
{
    queries();
    docs();
    for (auto _ : state) {
        benchmark::DoNotOptimize(dense::exact_topk_serial(queries(), docs(), 100));
    }
    state.SetItemsProcessed(state.iterations() * queries().rows());
}

void ExactParallel(benchmark::State& state)
{
    queries();
    docs();
    for (auto _ : state) {
        benchmark::DoNotOptimize(dense::exact_topk(queries(), docs(), 100));
    }
    state.SetItemsProcessed(state.iterations() * queries().rows());
}

void Bm25Serial(benchmark::State& state)
{
    bm25_index();
    bm25_queries();
    for (auto _ : state) {
        benchmark::DoNotOptimize(lexical::bm25_search_all_serial(bm25_index(), bm25_queries(), 100));
    }
    state.SetItemsProcessed(state.iterations() * bm25_queries().size());
}

void Bm25Parallel(benchmark::State& state)
{
    bm25_index();
    bm25_queries();
    for (auto _ : state) {
        benchmark::DoNotOptimize(lexical::bm25_search_all(bm25_index(), bm25_queries(), 100));
    }
    state.SetItemsProcessed(state.iterations() * bm25_queries().size());
}

void HnswSerial(benchmark::State& state)
{
    queries();
    hnsw();
    for (auto _ : state) {
        benchmark::DoNotOptimize(hnsw().search_all_serial(queries(), 100, 200));
    }
    state.SetItemsProcessed(state.iterations() * queries().rows());
}

void HnswParallel(benchmark::State& state)
{
    queries();
    hnsw();
    for (auto _ : state) {
        benchmark::DoNotOptimize(hnsw().search_all(queries(), 100, 200));
    }
    state.SetItemsProcessed(state.iterations() * queries().rows());
}

// toy_embed has no separate serial path; the thread count is the argument.
void ToyEmbed(benchmark::State& state)
{
    static const auto texts = word_texts(5000, 60, 6);
    const int before = omp_get_max_threads();
    omp_set_num_threads(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(dense::toy_embed(texts, 256, 42));
    }
    omp_set_num_threads(before);
    state.SetItemsProcessed(state.iterations() * texts.size());
}

} // namespace

BENCHMARK(ExactSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(ExactParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(Bm25Serial)->Unit(benchmark::kMillisecond);
BENCHMARK(Bm25Parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(HnswSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(HnswParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(ToyEmbed)
    ->Apply([](benchmark::internal::Benchmark* b) {
        b->Arg(1);
        if (omp_get_num_procs() > 1) {
            b->Arg(omp_get_num_procs());
        }
    })
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

BENCHMARK_MAIN();
