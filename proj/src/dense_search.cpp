#include "clir/dense_search.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "clir/error.hpp"
#include "clir/tokenizer.hpp"
#include "line_reader.hpp"

namespace clir::dense {
namespace {

void check_shapes(const EmbeddingMatrix& queries, const EmbeddingMatrix& docs, std::size_t k)
{
    if (k < 1) {
        throw UsageError("exact_topk: k must be >= 1");
    }
    if (queries.rows() > 0 && queries.dim() != docs.dim()) {
        throw DataError("dimension mismatch: queries have dim " + std::to_string(queries.dim()) +
                        ", documents have dim " + std::to_string(docs.dim()));
    }
}

} // namespace

std::vector<Hit> exact_topk_one(std::span<const float> query, const EmbeddingMatrix& docs,
                                std::size_t k)
{
    if (query.size() != docs.dim()) {
        throw DataError("dimension mismatch: query has dim " + std::to_string(query.size()) +
                        ", documents have dim " + std::to_string(docs.dim()));
    }
    const std::size_t keep = std::min(k, docs.rows());
    std::vector<Hit> heap;
    heap.reserve(keep + 1);
    // Min-heap on ranking order: the front is the worst kept hit.
    const auto worse_on_top = [](const Hit& a, const Hit& b) { return ranks_before(a, b); };
    for (std::size_t row = 0; row < docs.rows(); ++row) {
        const Hit h{static_cast<std::uint32_t>(row), dot(query, docs.row(row))};
        if (heap.size() < keep) {
            heap.push_back(h);
            std::push_heap(heap.begin(), heap.end(), worse_on_top);
        } else if (keep > 0 && ranks_before(h, heap.front())) {
            std::pop_heap(heap.begin(), heap.end(), worse_on_top);
            heap.back() = h;
            std::push_heap(heap.begin(), heap.end(), worse_on_top);
        }
    }
    std::sort(heap.begin(), heap.end(), ranks_before);
    return heap;
}

std::vector<std::vector<Hit>> exact_topk(const EmbeddingMatrix& queries,
                                         const EmbeddingMatrix& docs, std::size_t k,
                                         std::size_t block)
{
    check_shapes(queries, docs, k);
    if (block == 0) {
        throw UsageError("exact_topk: block size must be >= 1");
    }
    std::vector<std::vector<Hit>> out(queries.rows());
    for (std::size_t start = 0; start < queries.rows(); start += block) {
        const auto end = static_cast<std::ptrdiff_t>(std::min(queries.rows(), start + block));
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t q = static_cast<std::ptrdiff_t>(start); q < end; ++q) {
            out[q] = exact_topk_one(queries.row(q), docs, k);
        }
    }
    return out;
}

std::vector<std::vector<Hit>> exact_topk_serial(const EmbeddingMatrix& queries,
                                                const EmbeddingMatrix& docs, std::size_t k)
{
    check_shapes(queries, docs, k);
    std::vector<std::vector<Hit>> out;
    out.reserve(queries.rows());
    for (std::size_t q = 0; q < queries.rows(); ++q) {
        std::vector<Hit> all(docs.rows());
        for (std::size_t row = 0; row < docs.rows(); ++row) {
            all[row] = {static_cast<std::uint32_t>(row), dot(queries.row(q), docs.row(row))};
        }
        std::stable_sort(all.begin(), all.end(),
                         [](const Hit& a, const Hit& b) { return a.score > b.score; });
        all.resize(std::min(k, all.size()));
        out.push_back(std::move(all));
    }
    return out;
}

RunList to_run(const std::vector<std::vector<Hit>>& hits, const IdMap& query_ids,
               const IdMap& doc_ids, std::string tag)
{
    if (hits.size() != query_ids.size()) {
        throw DataError("to_run: " + std::to_string(hits.size()) + " result lists for " +
                        std::to_string(query_ids.size()) + " query ids");
    }
    RunList run(std::move(tag));
    for (std::size_t q = 0; q < hits.size(); ++q) {
        QueryResult r{query_ids[q], {}, std::nullopt};
        r.docs.reserve(hits[q].size());
        for (const auto& h : hits[q]) {
            r.docs.push_back({doc_ids[h.row], h.score});
        }
        run.add(std::move(r));
    }
    return run;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state)
{
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void add_direction(std::vector<double>& acc, std::string_view token, std::uint64_t seed,
                   double weight)
{
    std::uint64_t state = fnv1a(token) ^ splitmix64(seed);
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < acc.size(); ++i) {
        if (i % 64 == 0) {
            bits = splitmix64(state);
        }
        acc[i] += ((bits >> (i % 64)) & 1U) ? weight : -weight;
    }
}

constexpr std::string_view kEmptyToken = "\x01<empty>";

} // namespace

EmbeddingMatrix toy_embed(std::span<const std::string> texts, std::size_t dim, std::uint64_t seed,
                          const AlignmentLexicon* lexicon)
{
    if (dim < 8) {
        throw UsageError("toy_embed: dim must be >= 8");
    }
    std::vector<float> data(texts.size() * dim);
    const auto n = static_cast<std::ptrdiff_t>(texts.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t t = 0; t < n; ++t) {
        std::map<std::string, int> tf;
        for (auto& term : lexical::tokenize(texts[t])) {
            if (lexicon) {
                if (auto it = lexicon->find(term); it != lexicon->end()) {
                    term = it->second;
                }
            }
            ++tf[term];
        }
        std::vector<double> acc(dim, 0.0);
        if (tf.empty()) {
            add_direction(acc, kEmptyToken, seed, 1.0);
        }
        for (const auto& [term, count] : tf) {
            add_direction(acc, term, seed, count);
        }
        double sq = 0.0;
        for (double v : acc) {
            sq += v * v;
        }
        if (sq == 0.0) {
            // Opposing directions cancelled exactly; fall back deterministically.
            add_direction(acc, kEmptyToken, seed, 1.0);
            sq = static_cast<double>(dim);
        }
        const double norm = std::sqrt(sq);
        for (std::size_t i = 0; i < dim; ++i) {
            data[static_cast<std::size_t>(t) * dim + i] = static_cast<float>(acc[i] / norm);
        }
    }
    return EmbeddingMatrix(texts.size(), dim, std::move(data));
}

AlignmentLexicon read_lexicon(const std::string& path)
{
    auto in = detail::open_input(path);
    AlignmentLexicon lex;
    detail::for_each_line(in, [&](const std::string& line, std::size_t lineno) {
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
            throw DataError(path + ":" + std::to_string(lineno) +
                            ": expected 'term<TAB>shared_token'");
        }
        // Match the folded form the tokenizer produces.
        const auto fold = [](std::string text) {
            if (auto terms = lexical::tokenize(text); terms.size() == 1) {
                return std::move(terms.front());
            }
            return text;
        };
        lex[fold(line.substr(0, tab))] = fold(line.substr(tab + 1));
    });
    return lex;
}

} // namespace clir::dense
