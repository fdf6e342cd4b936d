#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "clir/language.hpp"

namespace clir {

struct Document {
    std::string doc_id;
    LangCode lang;
    std::string text;
    /// English rendering produced by the translation sidecar.
    std::optional<std::string> translated_text;

    bool operator==(const Document&) const = default;
};

struct Query {
    std::string query_id;
    LangCode lang;
    std::string text;

    bool operator==(const Query&) const = default;
};

struct Judgment {
    std::string query_id;
    std::string doc_id;
    int grade = 0;

    bool operator==(const Judgment&) const = default;
};

/// Languages accepted during ingestion. An empty set accepts every ISO 639-1
/// code.
struct LanguageSet {
    std::set<LangCode> allowed;

    bool accepts(std::string_view code) const;
};

/// Immutable, validated document collection. Rows are stable: the i-th
/// document keeps row i for every index built over the corpus.
class Corpus {
public:
    Corpus() = default;
    /// Throws DataError on duplicate doc_id or empty text.
    explicit Corpus(std::vector<Document> docs);

    std::span<const Document> documents() const { return docs_; }
    const Document& operator[](std::size_t row) const { return docs_[row]; }
    std::size_t size() const { return docs_.size(); }
    bool empty() const { return docs_.empty(); }

    std::optional<std::size_t> row_of(std::string_view doc_id) const;
    const Document* find(std::string_view doc_id) const;
    std::map<LangCode, std::size_t> language_counts() const;

    bool operator==(const Corpus& other) const { return docs_ == other.docs_; }

private:
    std::vector<Document> docs_;
    std::unordered_map<std::string, std::size_t> rows_;
};

class QuerySet {
public:
    QuerySet() = default;
    explicit QuerySet(std::vector<Query> queries);

    std::span<const Query> queries() const { return queries_; }
    std::size_t size() const { return queries_.size(); }
    bool empty() const { return queries_.empty(); }
    const Query* find(std::string_view query_id) const;

    bool operator==(const QuerySet& other) const { return queries_ == other.queries_; }

private:
    std::vector<Query> queries_;
    std::unordered_map<std::string, std::size_t> rows_;
};

/// Graded relevance judgments keyed by query.
class Judgments {
public:
    Judgments() = default;
    /// Throws DataError on duplicate (query_id, doc_id) or negative grades.
    explicit Judgments(std::vector<Judgment> judgments);

    /// Grade of (query, doc); unjudged pairs are 0.
    int grade(std::string_view query_id, std::string_view doc_id) const;
    bool has_query(std::string_view query_id) const;
    /// Judged docs of a query with their grades, doc_id ascending.
    const std::map<std::string, int>& judged(std::string_view query_id) const;
    /// Docs with grade >= min_grade, doc_id ascending.
    std::vector<std::string> relevant(std::string_view query_id, int min_grade = 1) const;
    /// The document used as "the" gold answer: highest grade, then smallest doc_id.
    std::optional<std::string> gold(std::string_view query_id, int min_grade = 1) const;
    std::vector<std::string> query_ids() const;
    std::vector<Judgment> all() const;
    std::size_t size() const { return count_; }

private:
    std::map<std::string, std::map<std::string, int>, std::less<>> by_query_;
    std::size_t count_ = 0;
};

struct CorpusManifest {
    std::string dataset_name;
    int retrieval_depth = 100;
    std::map<LangCode, std::size_t> per_language_doc_counts;
    int truncation_budget = 512;
    std::uint64_t seed = 0;
};

// Line-delimited record files. Blank lines and lines starting with '#' are
// skipped so outputs can carry a provenance header.
Corpus parse_corpus(std::istream& in, const LanguageSet& languages = {},
                    std::string_view source = "<corpus>");
Corpus read_corpus(const std::filesystem::path& path, const LanguageSet& languages = {});
void write_corpus(std::ostream& out, const Corpus& corpus);

QuerySet parse_queries(std::istream& in, const LanguageSet& languages = {},
                       std::string_view source = "<queries>");
QuerySet read_queries(const std::filesystem::path& path, const LanguageSet& languages = {});
void write_queries(std::ostream& out, const QuerySet& queries);

/// TREC qrels: "query_id 0 doc_id grade".
Judgments parse_qrels(std::istream& in, std::string_view source = "<qrels>");
Judgments read_qrels(const std::filesystem::path& path);
void write_qrels(std::ostream& out, const Judgments& qrels);

enum class TextField { original, translated };

TextField parse_text_field(std::string_view name);
std::string_view to_string(TextField field);

/// Text of `doc` for the given field; throws DataError naming the doc when
/// the translated field is requested but absent.
const std::string& field_text(const Document& doc, TextField field);

/// Canonical form used for duplicate detection: NFC, whitespace runs
/// collapsed to one space, trimmed.
std::string canonical_text(std::string_view text);

/// Collapses documents with identical canonical text (on `key_field`) into a
/// single representative and spreads the unique pool evenly over `languages`.
///
/// The pool is shuffled under `seed` and the i-th document is assigned
/// languages[i % L], so per-language counts differ by at most one. A group
/// member written in the assigned language is preferred as the output
/// document; otherwise the first-seen member is relabeled. Output keeps the
/// input order of the groups.
Corpus dedupe_and_rebalance(const Corpus& corpus, std::span<const LangCode> languages,
                            std::uint64_t seed, TextField key_field = TextField::original);

/// Draws `n` distinct queries uniformly without replacement. Every query in
/// the pool must be written in pair.query_lang.
QuerySet sample_queries(const QuerySet& pool, const LanguagePair& pair, std::size_t n,
                        std::uint64_t seed);

/// Language pair of each judged query: query language and the language of its
/// gold document. Queries without gold or with unknown documents are skipped.
std::map<std::string, LanguagePair> query_pairs(const QuerySet& queries, const Judgments& qrels,
                                                const Corpus& corpus, int min_grade = 1);

/// Queries grouped by language pair (see query_pairs).
std::map<LanguagePair, QuerySet> pair_pools(const QuerySet& queries, const Judgments& qrels,
                                            const Corpus& corpus, int min_grade = 1);

/// Longest prefix of `text` with at most `budget` engine terms.
std::string truncate_text(std::string_view text, std::size_t budget);

/// Applies truncate_text to text and translated_text of every document.
Corpus truncate_corpus(const Corpus& corpus, std::size_t budget);

CorpusManifest make_manifest(std::string dataset_name, const Corpus& corpus, int retrieval_depth,
                             int truncation_budget, std::uint64_t seed);
void write_manifest(std::ostream& out, const CorpusManifest& manifest);
CorpusManifest parse_manifest(std::istream& in);

} // namespace clir
