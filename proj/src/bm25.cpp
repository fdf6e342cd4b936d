#include "clir/bm25.hpp"

#include <cmath>
#include <numeric>
#include <unordered_map>

#include "binary_io.hpp"
#include "checksum.hpp"
#include "clir/error.hpp"
#include "clir/tokenizer.hpp"

namespace clir::lexical {

void Bm25Params::validate() const
{
    if (!(k1 >= 0.0) || !std::isfinite(k1)) {
        throw UsageError("BM25 k1 must be a finite value >= 0");
    }
    if (!(b >= 0.0 && b <= 1.0)) {
        throw UsageError("BM25 b must lie in [0, 1]");
    }
}

InvertedIndex::InvertedIndex(Bm25Params params, TextField field, std::vector<std::string> doc_ids,
                             std::vector<std::uint32_t> doc_lengths, PostingMap postings)
    : params_(params)
    , field_(field)
    , doc_ids_(std::move(doc_ids))
    , doc_lengths_(std::move(doc_lengths))
    , postings_(std::move(postings))
{
    params_.validate();
    if (doc_ids_.size() != doc_lengths_.size()) {
        throw DataError("BM25 index: doc id and length tables differ in size");
    }
    if (!doc_lengths_.empty()) {
        const double total =
            std::accumulate(doc_lengths_.begin(), doc_lengths_.end(), 0.0,
                            [](double acc, std::uint32_t len) { return acc + len; });
        avg_doc_length_ = total / static_cast<double>(doc_lengths_.size());
    }
    for (const auto& [term, list] : postings_) {
        for (std::size_t i = 0; i < list.size(); ++i) {
            if (list[i].row >= doc_ids_.size() || list[i].tf == 0 ||
                (i > 0 && list[i].row <= list[i - 1].row)) {
                throw DataError("BM25 index: invalid posting list for term '" + term + "'");
            }
        }
    }
}

std::span<const Posting> InvertedIndex::postings(std::string_view term) const
{
    auto it = postings_.find(term);
    if (it == postings_.end()) {
        return {};
    }
    return it->second;
}

double InvertedIndex::idf(std::size_t df) const
{
    const double n = static_cast<double>(doc_count());
    const double d = static_cast<double>(df);
    return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

InvertedIndex build_index(const Corpus& corpus, TextField field, Bm25Params params)
{
    params.validate();
    if (corpus.empty()) {
        throw UsageError("cannot build a BM25 index over an empty corpus");
    }
    std::vector<std::string> ids;
    std::vector<std::uint32_t> lengths;
    ids.reserve(corpus.size());
    lengths.reserve(corpus.size());
    InvertedIndex::PostingMap postings;

    for (std::size_t row = 0; row < corpus.size(); ++row) {
        const auto& doc = corpus[row];
        const auto terms = tokenize(field_text(doc, field));
        std::map<std::string_view, std::uint32_t> tf;
        for (const auto& t : terms) {
            ++tf[t];
        }
        for (const auto& [term, count] : tf) {
            auto it = postings.find(term);
            if (it == postings.end()) {
                it = postings.emplace(std::string(term), std::vector<Posting>{}).first;
            }
            it->second.push_back({static_cast<std::uint32_t>(row), count});
        }
        ids.push_back(doc.doc_id);
        lengths.push_back(static_cast<std::uint32_t>(terms.size()));
    }
    return InvertedIndex(params, field, std::move(ids), std::move(lengths), std::move(postings));
}

std::vector<Hit> bm25_search(const InvertedIndex& index, std::string_view query_text,
                             std::size_t k)
{
    if (k < 1) {
        throw UsageError("bm25_search: k must be >= 1");
    }
    const auto& p = index.params();
    const double avglen = index.avg_doc_length();
    const auto lengths = index.doc_lengths();

    std::unordered_map<std::uint32_t, double> acc;
    for (const auto& term : tokenize(query_text)) {
        const auto list = index.postings(term);
        if (list.empty()) {
            continue;
        }
        const double idf = index.idf(list.size());
        for (const auto& post : list) {
            const double tf = post.tf;
            const double norm = avglen > 0.0 ? lengths[post.row] / avglen : 0.0;
            acc[post.row] += idf * tf * (p.k1 + 1.0) / (tf + p.k1 * (1.0 - p.b + p.b * norm));
        }
    }

    std::vector<Hit> hits;
    hits.reserve(acc.size());
    for (const auto& [row, score] : acc) {
        if (score > 0.0) {
            hits.push_back({row, score});
        }
    }
    keep_top_k(hits, k);
    return hits;
}

std::vector<ScoredDoc> bm25_search_docs(const InvertedIndex& index, std::string_view query_text,
                                        std::size_t k)
{
    const auto ids = index.doc_ids();
    std::vector<ScoredDoc> out;
    for (const auto& h : bm25_search(index, query_text, k)) {
        out.push_back({ids[h.row], h.score});
    }
    return out;
}

RunList bm25_search_all(const InvertedIndex& index, const QuerySet& queries, std::size_t k,
                        std::string tag)
{
    const auto qs = queries.queries();
    std::vector<std::vector<ScoredDoc>> lists(qs.size());
    const auto n = static_cast<std::ptrdiff_t>(qs.size());
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        lists[i] = bm25_search_docs(index, qs[i].text, k);
    }
    RunList run(std::move(tag));
    for (std::size_t i = 0; i < qs.size(); ++i) {
        run.add({qs[i].query_id, std::move(lists[i]), std::nullopt});
    }
    return run;
}

RunList bm25_search_all_serial(const InvertedIndex& index, const QuerySet& queries,
                               std::size_t k, std::string tag)
{
    RunList run(std::move(tag));
    for (const auto& q : queries.queries()) {
        run.add({q.query_id, bm25_search_docs(index, q.text, k), std::nullopt});
    }
    return run;
}

namespace {
constexpr char kMagic[4] = {'C', 'L', 'X', 'I'};
}

std::vector<unsigned char> serialize_index(const InvertedIndex& index)
{
    detail::ByteWriter w;
    w.put_bytes({kMagic, 4});
    w.put(kIndexFormatVersion);
    w.put(index.params().k1);
    w.put(index.params().b);
    w.put(static_cast<std::uint8_t>(index.field() == TextField::original ? 0 : 1));

    w.put(static_cast<std::uint64_t>(index.doc_count()));
    for (std::size_t row = 0; row < index.doc_count(); ++row) {
        w.put_string(index.doc_ids()[row]);
        w.put(index.doc_lengths()[row]);
    }

    w.put(static_cast<std::uint64_t>(index.postings().size()));
    for (const auto& [term, list] : index.postings()) {
        w.put_string(term);
        w.put(static_cast<std::uint32_t>(list.size()));
        for (const auto& p : list) {
            w.put(p.row);
            w.put(p.tf);
        }
    }
    w.put(detail::crc32_of(w.bytes()));
    return w.bytes();
}

InvertedIndex deserialize_index(std::span<const unsigned char> bytes, std::string_view source)
{
    const std::string what(source);
    if (bytes.size() < 8 || std::string_view(reinterpret_cast<const char*>(bytes.data()), 4) !=
                                std::string_view(kMagic, 4)) {
        throw DataError(what + ": not a BM25 index file (bad magic)");
    }
    const auto body = bytes.first(bytes.size() - 4);
    detail::ByteReader tail(bytes.last(4), what);
    if (tail.get<std::uint32_t>() != detail::crc32_of(body)) {
        throw DataError(what + ": checksum mismatch (corrupted file)");
    }

    detail::ByteReader r(body, what);
    r.seek(4);
    const auto version = r.get<std::uint32_t>();
    if (version != kIndexFormatVersion) {
        throw DataError(what + ": unsupported BM25 index version " + std::to_string(version));
    }
    Bm25Params params;
    params.k1 = r.get<double>();
    params.b = r.get<double>();
    const auto field_tag = r.get<std::uint8_t>();
    if (field_tag > 1) {
        throw DataError(what + ": bad field tag");
    }

    const auto doc_count = r.get<std::uint64_t>();
    std::vector<std::string> ids;
    std::vector<std::uint32_t> lengths;
    for (std::uint64_t i = 0; i < doc_count; ++i) {
        ids.push_back(r.get_string());
        lengths.push_back(r.get<std::uint32_t>());
    }

    InvertedIndex::PostingMap postings;
    const auto term_count = r.get<std::uint64_t>();
    for (std::uint64_t t = 0; t < term_count; ++t) {
        auto term = r.get_string();
        const auto n = r.get<std::uint32_t>();
        if (static_cast<std::uint64_t>(n) * 8 > r.remaining()) {
            throw DataError(what + ": truncated or corrupted file");
        }
        std::vector<Posting> list(n);
        for (auto& p : list) {
            p.row = r.get<std::uint32_t>();
            p.tf = r.get<std::uint32_t>();
        }
        postings.emplace(std::move(term), std::move(list));
    }
    if (r.remaining() != 0) {
        throw DataError(what + ": trailing bytes after postings");
    }
    return InvertedIndex(params, field_tag == 0 ? TextField::original : TextField::translated,
                         std::move(ids), std::move(lengths), std::move(postings));
}

void save_index(const InvertedIndex& index, const std::filesystem::path& path)
{
    detail::write_file_bytes(path.string(), serialize_index(index));
}

InvertedIndex load_index(const std::filesystem::path& path)
{
    const auto bytes = detail::read_file_bytes(path.string());
    return deserialize_index(bytes, path.string());
}

} // namespace clir::lexical
