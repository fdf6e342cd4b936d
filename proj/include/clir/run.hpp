#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "clir/language.hpp"

namespace clir {

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;

    bool operator==(const ScoredDoc&) const = default;
};

/// Ranked list for one query, best first.
struct QueryResult {
    std::string query_id;
    std::vector<ScoredDoc> docs;
    std::optional<LanguagePair> pair;

    bool operator==(const QueryResult&) const = default;
};

/// Per-query ranked lists; the exchange object between retrieval,
/// re-ranking and evaluation. Query order is insertion order.
class RunList {
public:
    RunList() = default;
    explicit RunList(std::string tag)
        : tag_(std::move(tag))
    {}

    const std::string& tag() const { return tag_; }
    void set_tag(std::string tag) { tag_ = std::move(tag); }

    /// Throws DataError when the query is already present, a doc repeats, or
    /// scores increase down the list.
    void add(QueryResult result);

    const std::vector<QueryResult>& results() const { return results_; }
    const QueryResult* find(std::string_view query_id) const;
    std::size_t size() const { return results_.size(); }
    bool empty() const { return results_.empty(); }

    bool operator==(const RunList& other) const
    {
        return tag_ == other.tag_ && results_ == other.results_;
    }

private:
    std::string tag_;
    std::vector<QueryResult> results_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Writes "query_id Q0 doc_id rank score tag" rows. `header` lines are
/// emitted first as '#' comments. A query with an empty list is kept as a
/// "# no-results <query_id>" line so the query set survives a round trip.
void write_trec_run(std::ostream& out, const RunList& run,
                    const std::vector<std::string>& header = {});
void write_trec_run(const std::filesystem::path& path, const RunList& run,
                    const std::vector<std::string>& header = {});

/// Rows of each query are ordered by the rank column.
RunList parse_trec_run(std::istream& in, std::string_view source = "<run>");
RunList read_trec_run(const std::filesystem::path& path);

/// Score rendering shared by every run and report writer.
std::string format_score(double score);

} // namespace clir
