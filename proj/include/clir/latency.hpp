#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clir/embedding.hpp"
#include "clir/error.hpp"
#include "clir/language.hpp"
#include "clir/run.hpp"

namespace clir::bench {

enum class Method { exact, ann };

std::string_view to_string(Method m);

struct TraceEntry {
    LanguagePair pair;
    Method method = Method::exact;
    /// Seconds since the start of the measured loop (monotonic clock).
    double completion = 0.0;
    /// Wall time of this call alone.
    double duration = 0.0;
};

struct LatencyTrace {
    std::vector<TraceEntry> entries;
    int pair_count = 0;
};

/// Throws DataError unless entries come in per-pair couples with one call of
/// each method, methods alternate along the sequence, and completion times
/// never decrease. The first method may be either.
void validate_trace(const LatencyTrace& trace);

/// Queries of one language pair, as embedding rows.
struct PairWorkload {
    LanguagePair pair;
    dense::EmbeddingMatrix queries;
    dense::IdMap query_ids;
};

using Engine = std::function<RunList(const PairWorkload&)>;

struct InterleavedRun {
    LatencyTrace trace;
    std::vector<RunList> exact_runs;
    std::vector<RunList> ann_runs;
};

/// Raised when an engine fails mid-measurement; carries the trace so far.
class InterleaveError : public DataError {
public:
    InterleaveError(const std::string& what, LatencyTrace partial)
        : DataError(what)
        , partial_(std::move(partial))
    {}
    const LatencyTrace& partial() const { return partial_; }

private:
    LatencyTrace partial_;
};

/// For each pair in order: exact engine, then ANN engine, each stamped on
/// completion. One full round is run first and discarded to warm caches.
/// pair_count <= 0 uses the number of workloads. Single-threaded by design.
InterleavedRun run_interleaved(std::span<const PairWorkload> workloads, const Engine& exact,
                               const Engine& ann, int pair_count = 0, bool warm_up = true);

struct LatencyReport {
    int pair_count = 0;
    /// Completion times min-max scaled to [0, 1], times pair_count.
    std::vector<double> normalized;
    /// Mean of t(ann) - t(exact) within each pair.
    double mean_exact_to_ann = 0.0;
    /// Mean of t(exact) - t(ann) across each pair boundary.
    double mean_ann_to_exact = 0.0;
    /// Average of the two means (the first one alone with a single pair).
    double mean_difference = 0.0;
    bool degenerate = false;
    double mean_exact_duration = 0.0;
    double mean_ann_duration = 0.0;
};

/// Requires at least two entries; validates the trace first.
LatencyReport normalize_and_summarize(const LatencyTrace& trace);

struct RecallComparison {
    /// Mean fraction of the exact top-k recovered by ANN.
    double ann_overlap = 0.0;
    std::optional<double> exact_recall;
    std::optional<double> ann_recall;
    std::size_t k = 100;
};

/// Mean |exact_k ∩ ann_k| / |exact_k| over queries present in both runs.
double mean_overlap(const RunList& exact, const RunList& ann, std::size_t k);

void write_latency_records(std::ostream& out, std::string_view dataset,
                           const LatencyReport& report, const RecallComparison& recall,
                           const std::vector<std::string>& header = {});
/// method x dataset: normalized time, raw ms, Recall@k.
void write_latency_table(std::ostream& out, std::string_view dataset, const LatencyReport& report,
                         const RecallComparison& recall);

} // namespace clir::bench
