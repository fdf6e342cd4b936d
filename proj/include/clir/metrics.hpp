#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clir/corpus.hpp"
#include "clir/language.hpp"
#include "clir/run.hpp"

namespace clir::eval {

/// 1 when any of the first k docs has grade >= min_grade, else 0.
double query_recall_at_k(std::span<const ScoredDoc> ranked, const Judgments& qrels,
                         std::string_view query_id, std::size_t k, int min_grade = 1);

/// DCG@k / IDCG@k with gain 2^g - 1 and discount log2(rank + 1); 0 when the
/// ideal DCG is 0.
double query_ndcg_at_k(std::span<const ScoredDoc> ranked, const Judgments& qrels,
                       std::string_view query_id, std::size_t k);

/// Query -> language pair assignment used to group evaluation.
using PairAssignment = std::map<std::string, LanguagePair>;

/// Per-pair Recall@k: fraction of the pair's queries with a relevant doc in
/// the top k. Throws DataError for run queries missing from qrels or from
/// the assignment.
std::map<LanguagePair, double> recall_at_k(const RunList& run, const Judgments& qrels,
                                           const PairAssignment& pairs, std::size_t k,
                                           int min_grade = 1);

/// Per-pair mean nDCG@k.
std::map<LanguagePair, double> ndcg_at_k(const RunList& run, const Judgments& qrels,
                                         const PairAssignment& pairs, std::size_t k);

struct PairMetrics {
    LanguagePair pair;
    std::size_t query_count = 0;
    std::map<std::size_t, double> recall;
    std::map<std::size_t, double> ndcg;
};

struct MetricReport {
    std::vector<PairMetrics> pairs;
    /// Unweighted mean over pairs.
    std::map<std::size_t, double> macro_recall;
    std::map<std::size_t, double> macro_ndcg;
    /// Mean over all queries (pairs weighted by query count).
    std::map<std::size_t, double> micro_recall;
    std::map<std::size_t, double> micro_ndcg;
    std::size_t total_queries = 0;

    const PairMetrics* find(const LanguagePair& pair) const;
};

/// Combines per-pair values into macro and micro averages. Requires at
/// least one pair.
MetricReport aggregate(std::vector<PairMetrics> per_pair);

struct EvalOptions {
    std::vector<std::size_t> ks = {10, 100};
    /// Grade threshold for Recall; nDCG always uses raw grades.
    int min_grade = 1;
};

/// Full evaluation of a run. Every assigned query that has judgments must
/// appear in the run; a missing one raises DataError naming it.
MetricReport evaluate(const RunList& run, const Judgments& qrels, const PairAssignment& pairs,
                      const EvalOptions& options = {});

/// Line-delimited records: one per pair, then "macro" and "micro" rows.
void write_report_records(std::ostream& out, const MetricReport& report,
                          const std::vector<std::string>& header = {});
/// Fixed-width table of the same content.
void write_report_table(std::ostream& out, const MetricReport& report);

/// Reads per-pair Recall@k back from write_report_records output.
std::map<LanguagePair, double> read_pair_recall(std::istream& in, std::size_t k,
                                                std::string_view source = "<report>");

} // namespace clir::eval
