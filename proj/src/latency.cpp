#include "clir/latency.hpp"

#include <algorithm>
#include <chrono>
#include <ostream>
#include <unordered_set>

#include <fmt/format.h>

#include "json.hpp"

namespace clir::bench {

std::string_view to_string(Method m)
{
    return m == Method::exact ? "exact" : "ann";
}

void validate_trace(const LatencyTrace& trace)
{
    const auto& e = trace.entries;
    if (e.size() % 2 != 0) {
        throw DataError("latency trace has an odd number of entries");
    }
    for (std::size_t i = 0; i < e.size(); ++i) {
        if (i > 0 && e[i].completion < e[i - 1].completion) {
            throw DataError("latency trace timestamps decrease at entry " + std::to_string(i));
        }
        if (i > 0 && e[i].method == e[i - 1].method) {
            throw DataError("latency trace breaks alternation at entry " + std::to_string(i));
        }
        if (i % 2 == 1 && e[i].pair != e[i - 1].pair) {
            throw DataError("latency trace entries " + std::to_string(i - 1) + " and " +
                            std::to_string(i) + " belong to different pairs");
        }
    }
}

InterleavedRun run_interleaved(std::span<const PairWorkload> workloads, const Engine& exact,
                               const Engine& ann, int pair_count, bool warm_up)
{
    using clock = std::chrono::steady_clock;
    InterleavedRun out;
    out.trace.pair_count = pair_count > 0 ? pair_count : static_cast<int>(workloads.size());

    if (warm_up) {
        for (const auto& w : workloads) {
            (void)exact(w);
            (void)ann(w);
        }
    }

    const auto origin = clock::now();
    const auto seconds = [](clock::duration d) { return std::chrono::duration<double>(d).count(); };
    for (const auto& w : workloads) {
        for (Method m : {Method::exact, Method::ann}) {
            const auto start = clock::now();
            RunList result;
            try {
                result = m == Method::exact ? exact(w) : ann(w);
            } catch (const std::exception& err) {
                throw InterleaveError(std::string(to_string(m)) + " engine failed on pair " +
                                          w.pair.label() + " after " +
                                          std::to_string(out.trace.entries.size()) +
                                          " timestamps: " + err.what(),
                                      out.trace);
            }
            const auto done = clock::now();
            out.trace.entries.push_back({w.pair, m, seconds(done - origin), seconds(done - start)});
            (m == Method::exact ? out.exact_runs : out.ann_runs).push_back(std::move(result));
        }
    }
    return out;
}

LatencyReport normalize_and_summarize(const LatencyTrace& trace)
{
    const auto& e = trace.entries;
    if (e.size() < 2) {
        throw DataError("latency trace needs at least two timestamps");
    }
    if (trace.pair_count < 1) {
        throw UsageError("latency trace pair count must be >= 1");
    }
    validate_trace(trace);

    LatencyReport report;
    report.pair_count = trace.pair_count;
    const auto [lo, hi] = std::minmax_element(e.begin(), e.end(), [](const auto& a, const auto& b) {
        return a.completion < b.completion;
    });
    const double range = hi->completion - lo->completion;
    report.degenerate = !(range > 0.0);
    report.normalized.reserve(e.size());
    for (const auto& x : e) {
        report.normalized.push_back(
            report.degenerate ? 0.0 : (x.completion - lo->completion) / range * trace.pair_count);
    }

    const auto& n = report.normalized;
    const auto ann_minus_exact = [&](std::size_t i, std::size_t j) {
        return e[i].method == Method::ann ? n[i] - n[j] : n[j] - n[i];
    };
    double within = 0.0;
    std::size_t within_n = 0;
    for (std::size_t i = 0; i + 1 < n.size(); i += 2) {
        within += ann_minus_exact(i, i + 1);
        ++within_n;
    }
    double across = 0.0;
    std::size_t across_n = 0;
    for (std::size_t i = 1; i + 1 < n.size(); i += 2) {
        across -= ann_minus_exact(i, i + 1);
        ++across_n;
    }
    report.mean_exact_to_ann = within / static_cast<double>(within_n);
    report.mean_ann_to_exact = across_n > 0 ? across / static_cast<double>(across_n) : 0.0;
    report.mean_difference = across_n > 0
                                 ? (report.mean_exact_to_ann + report.mean_ann_to_exact) / 2.0
                                 : report.mean_exact_to_ann;

    double exact_sum = 0.0;
    double ann_sum = 0.0;
    for (const auto& x : e) {
        (x.method == Method::exact ? exact_sum : ann_sum) += x.duration;
    }
    report.mean_exact_duration = exact_sum / static_cast<double>(e.size() / 2);
    report.mean_ann_duration = ann_sum / static_cast<double>(e.size() / 2);
    return report;
}

double mean_overlap(const RunList& exact, const RunList& ann, std::size_t k)
{
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& r : exact.results()) {
        const auto* other = ann.find(r.query_id);
        if (other == nullptr) {
            continue;
        }
        const std::size_t depth = std::min(k, r.docs.size());
        if (depth == 0) {
            continue;
        }
        std::unordered_set<std::string> truth;
        for (std::size_t i = 0; i < depth; ++i) {
            truth.insert(r.docs[i].doc_id);
        }
        std::size_t hit = 0;
        for (std::size_t i = 0; i < std::min(k, other->docs.size()); ++i) {
            hit += truth.count(other->docs[i].doc_id);
        }
        sum += static_cast<double>(hit) / static_cast<double>(depth);
        ++count;
    }
    return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

void write_latency_records(std::ostream& out, std::string_view dataset,
                           const LatencyReport& report, const RecallComparison& recall,
                           const std::vector<std::string>& header)
{
    for (const auto& h : header) {
        out << "# " << h << '\n';
    }
    nlohmann::ordered_json rec;
    rec["type"] = "latency";
    rec["dataset"] = std::string(dataset);
    rec["pair_count"] = report.pair_count;
    rec["degenerate"] = report.degenerate;
    rec["mean_exact_to_ann"] = report.mean_exact_to_ann;
    rec["mean_ann_to_exact"] = report.mean_ann_to_exact;
    rec["mean_difference"] = report.mean_difference;
    rec["mean_exact_duration_s"] = report.mean_exact_duration;
    rec["mean_ann_duration_s"] = report.mean_ann_duration;
    rec["normalized"] = report.normalized;
    rec["k"] = recall.k;
    rec["ann_overlap"] = recall.ann_overlap;
    rec["exact_recall"] = recall.exact_recall ? nlohmann::ordered_json(*recall.exact_recall)
                                              : nlohmann::ordered_json(nullptr);
    rec["ann_recall"] = recall.ann_recall ? nlohmann::ordered_json(*recall.ann_recall)
                                          : nlohmann::ordered_json(nullptr);
    out << rec.dump() << '\n';
}

void write_latency_table(std::ostream& out, std::string_view dataset, const LatencyReport& report,
                         const RecallComparison& recall)
{
    const auto fmt_recall = [](const std::optional<double>& r) {
        return r ? fmt::format("{:.4f}", *r) : std::string("-");
    };
    const std::string r_head = "R@" + std::to_string(recall.k);
    out << fmt::format("{:<8} {:<12} {:>12} {:>12} {:>10}\n", "method", "dataset", "norm.time",
                       "raw ms", r_head);
    out << std::string(58, '-') << '\n';
    out << fmt::format("{:<8} {:<12} {:>12.4f} {:>12.4f} {:>10}\n", "dense", dataset,
                       report.mean_ann_to_exact, report.mean_exact_duration * 1e3,
                       fmt_recall(recall.exact_recall));
    out << fmt::format("{:<8} {:<12} {:>12.4f} {:>12.4f} {:>10}\n", "ann", dataset,
                       report.mean_exact_to_ann, report.mean_ann_duration * 1e3,
                       fmt_recall(recall.ann_recall));
    out << fmt::format("mean normalized difference {:.4f}; ANN overlap with exact top-{} {:.4f}{}\n",
                       report.mean_difference, recall.k, recall.ann_overlap,
                       report.degenerate ? " (degenerate trace)" : "");
}

} // namespace clir::bench
