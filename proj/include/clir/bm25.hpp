#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clir/corpus.hpp"
#include "clir/run.hpp"
#include "clir/topk.hpp"

namespace clir::lexical {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;

    bool operator==(const Bm25Params&) const = default;
    /// Throws UsageError unless k1 >= 0 and b in [0, 1].
    void validate() const;
};

struct Posting {
    std::uint32_t row = 0;
    std::uint32_t tf = 0;

    bool operator==(const Posting&) const = default;
};

/// Immutable BM25 index over one text field of a corpus.
class InvertedIndex {
public:
    using PostingMap = std::map<std::string, std::vector<Posting>, std::less<>>;

    InvertedIndex() = default;
    InvertedIndex(Bm25Params params, TextField field, std::vector<std::string> doc_ids,
                  std::vector<std::uint32_t> doc_lengths, PostingMap postings);

    const Bm25Params& params() const { return params_; }
    TextField field() const { return field_; }
    std::size_t doc_count() const { return doc_ids_.size(); }
    double avg_doc_length() const { return avg_doc_length_; }
    std::span<const std::uint32_t> doc_lengths() const { return doc_lengths_; }
    std::span<const std::string> doc_ids() const { return doc_ids_; }
    const PostingMap& postings() const { return postings_; }
    /// Empty span for unknown terms.
    std::span<const Posting> postings(std::string_view term) const;

    /// ln(1 + (N - df + 0.5) / (df + 0.5)); positive for every df <= N.
    double idf(std::size_t df) const;

    bool operator==(const InvertedIndex&) const = default;

private:
    Bm25Params params_;
    TextField field_ = TextField::original;
    std::vector<std::string> doc_ids_;
    std::vector<std::uint32_t> doc_lengths_;
    double avg_doc_length_ = 0.0;
    PostingMap postings_;
};

InvertedIndex build_index(const Corpus& corpus, TextField field = TextField::original,
                          Bm25Params params = {});

/// Top-k rows for a query. Every query term occurrence contributes
/// idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len / avglen)).
/// Rows scoring zero are not returned.
std::vector<Hit> bm25_search(const InvertedIndex& index, std::string_view query_text,
                             std::size_t k);

/// bm25_search with doc ids attached.
std::vector<ScoredDoc> bm25_search_docs(const InvertedIndex& index, std::string_view query_text,
                                        std::size_t k);

/// Searches every query; queries are scored in parallel (OpenMP) and merged
/// in query order.
RunList bm25_search_all(const InvertedIndex& index, const QuerySet& queries, std::size_t k,
                        std::string tag = "bm25");

/// Single-threaded reference for bm25_search_all.
RunList bm25_search_all_serial(const InvertedIndex& index, const QuerySet& queries,
                               std::size_t k, std::string tag = "bm25");

// Binary index file; layout in docs/FORMATS.md.
inline constexpr std::uint32_t kIndexFormatVersion = 1;
void save_index(const InvertedIndex& index, const std::filesystem::path& path);
InvertedIndex load_index(const std::filesystem::path& path);
std::vector<unsigned char> serialize_index(const InvertedIndex& index);
InvertedIndex deserialize_index(std::span<const unsigned char> bytes,
                                std::string_view source = "<bm25 index>");

} // namespace clir::lexical
