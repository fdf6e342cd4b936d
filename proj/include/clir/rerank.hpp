#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "clir/corpus.hpp"
#include "clir/run.hpp"

namespace clir::rerank {

inline constexpr std::size_t kDefaultDepth = 100;

/// Re-ranking candidates for one query.
struct CandidateSet {
    std::string query_id;
    std::vector<std::string> doc_ids;
    /// Position in doc_ids (1-based); ties in external scores fall back to it.
    std::map<std::string, std::size_t> first_stage_ranks;
    /// Gold doc forced into the list, when injection happened.
    std::optional<std::string> injected;

    bool operator==(const CandidateSet&) const = default;
};

/// Takes the top `depth` first-stage docs per query and guarantees the gold
/// doc is present: it replaces the item at position `depth` when the list is
/// full, or is appended to a shorter list. Queries are processed in run
/// order. Every judged query must be in the run.
std::vector<CandidateSet> make_candidates(const RunList& run, const Judgments& qrels,
                                          std::size_t depth = kDefaultDepth, int min_grade = 1);

enum class NegativeMode { easy, hard };

NegativeMode parse_negative_mode(std::string_view name);
std::string_view to_string(NegativeMode mode);

struct TrainingPair {
    std::string query_id;
    std::string query_text;
    std::string doc_id;
    std::string doc_text;
    int label = 0;
    NegativeMode difficulty = NegativeMode::easy;

    bool operator==(const TrainingPair&) const = default;
};

/// Non-relevant training documents for a query.
///
/// easy: m uniform draws without replacement (under `seed`) from corpus docs
/// whose grade is below min_grade, unjudged docs included.
/// hard: the m highest-ranked docs of `first_stage` below min_grade.
/// Throws when fewer than m negatives are eligible, or when hard mode has no
/// first-stage list.
std::vector<TrainingPair> sample_negatives(const Query& query, const Judgments& qrels,
                                           const Corpus& corpus,
                                           const QueryResult* first_stage, NegativeMode mode,
                                           std::size_t m, std::uint64_t seed,
                                           TextField field = TextField::original,
                                           int min_grade = 1);

/// Positives (label 1) plus sampled negatives for every query with gold.
/// Each query's easy draws use a seed derived from `seed` and the query id.
std::vector<TrainingPair> build_training_pairs(const QuerySet& queries, const Judgments& qrels,
                                               const Corpus& corpus, const RunList* first_stage,
                                               NegativeMode mode, std::size_t m,
                                               std::uint64_t seed,
                                               TextField field = TextField::original,
                                               int min_grade = 1);

using ScoreKey = std::pair<std::string, std::string>;
using ScoreMap = std::map<ScoreKey, double>;

/// Re-sorts candidates by external score (descending), ties by first-stage
/// rank. Throws DataError naming the first candidate without a score.
QueryResult apply_external_scores(const CandidateSet& candidates, const ScoreMap& scores);

struct ScoringRequest {
    std::string query_id;
    std::string doc_id;
    std::string query_text;
    std::string doc_text;

    bool operator==(const ScoringRequest&) const = default;
};

std::vector<ScoringRequest> scoring_requests(const std::vector<CandidateSet>& candidates,
                                             const QuerySet& queries, const Corpus& corpus,
                                             TextField field = TextField::original);

void write_scoring_requests(std::ostream& out, const std::vector<ScoringRequest>& requests);
std::vector<ScoringRequest> parse_scoring_requests(std::istream& in,
                                                   std::string_view source = "<requests>");

/// Response records {query_id, doc_id, score}. Duplicates are allowed only
/// with identical scores.
ScoreMap parse_scores(std::istream& in, std::string_view source = "<scores>");
ScoreMap read_scores(const std::filesystem::path& path);
void write_scores(std::ostream& out, const ScoreMap& scores);

void write_training_pairs(std::ostream& out, const std::vector<TrainingPair>& pairs);
std::vector<TrainingPair> parse_training_pairs(std::istream& in,
                                               std::string_view source = "<pairs>");

void write_candidates(std::ostream& out, const std::vector<CandidateSet>& sets);
std::vector<CandidateSet> parse_candidates(std::istream& in,
                                           std::string_view source = "<candidates>");

} // namespace clir::rerank
