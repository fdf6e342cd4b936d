#include "clir/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>

#include <fmt/format.h>

#include "json.hpp"

#include "clir/error.hpp"
#include "line_reader.hpp"

namespace clir::eval {

double query_recall_at_k(std::span<const ScoredDoc> ranked, const Judgments& qrels,
                         std::string_view query_id, std::size_t k, int min_grade)
{
    if (k < 1) {
        throw UsageError("recall@k: k must be >= 1");
    }
    const std::size_t depth = std::min(k, ranked.size());
    for (std::size_t i = 0; i < depth; ++i) {
        if (qrels.grade(query_id, ranked[i].doc_id) >= min_grade) {
            return 1.0;
        }
    }
    return 0.0;
}

double query_ndcg_at_k(std::span<const ScoredDoc> ranked, const Judgments& qrels,
                       std::string_view query_id, std::size_t k)
{
    if (k < 1) {
        throw UsageError("ndcg@k: k must be >= 1");
    }
    const auto gain = [](int grade) {
        if (grade < 0) {
            throw DataError("negative relevance grade");
        }
        return std::exp2(static_cast<double>(grade)) - 1.0;
    };
    double dcg = 0.0;
    const std::size_t depth = std::min(k, ranked.size());
    for (std::size_t i = 0; i < depth; ++i) {
        const int g = qrels.grade(query_id, ranked[i].doc_id);
        if (g != 0) {
            dcg += gain(g) / std::log2(static_cast<double>(i) + 2.0);
        }
    }

    std::vector<int> ideal;
    for (const auto& [doc, g] : qrels.judged(query_id)) {
        if (g != 0) {
            ideal.push_back(g);
        }
    }
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) {
        idcg += gain(ideal[i]) / std::log2(static_cast<double>(i) + 2.0);
    }
    return idcg > 0.0 ? dcg / idcg : 0.0;
}

namespace {

const LanguagePair& pair_of(const QueryResult& r, const Judgments& qrels,
                            const PairAssignment& pairs)
{
    if (!qrels.has_query(r.query_id)) {
        throw DataError("query '" + r.query_id + "' is in the run but has no judgments");
    }
    if (auto it = pairs.find(r.query_id); it != pairs.end()) {
        return it->second;
    }
    if (r.pair) {
        return *r.pair;
    }
    throw DataError("query '" + r.query_id + "' has no language pair assignment");
}

template <typename PerQuery>
std::map<LanguagePair, double> per_pair_mean(const RunList& run, const Judgments& qrels,
                                             const PairAssignment& pairs, PerQuery&& value)
{
    std::map<LanguagePair, std::pair<double, std::size_t>> sums;
    for (const auto& r : run.results()) {
        auto& [sum, n] = sums[pair_of(r, qrels, pairs)];
        sum += value(r);
        ++n;
    }
    std::map<LanguagePair, double> out;
    for (const auto& [pair, s] : sums) {
        out.emplace(pair, s.first / static_cast<double>(s.second));
    }
    return out;
}

} // namespace

std::map<LanguagePair, double> recall_at_k(const RunList& run, const Judgments& qrels,
                                           const PairAssignment& pairs, std::size_t k,
                                           int min_grade)
{
    return per_pair_mean(run, qrels, pairs, [&](const QueryResult& r) {
        return query_recall_at_k(r.docs, qrels, r.query_id, k, min_grade);
    });
}

std::map<LanguagePair, double> ndcg_at_k(const RunList& run, const Judgments& qrels,
                                         const PairAssignment& pairs, std::size_t k)
{
    return per_pair_mean(run, qrels, pairs, [&](const QueryResult& r) {
        return query_ndcg_at_k(r.docs, qrels, r.query_id, k);
    });
}

const PairMetrics* MetricReport::find(const LanguagePair& pair) const
{
    auto it = std::find_if(pairs.begin(), pairs.end(),
                           [&](const PairMetrics& p) { return p.pair == pair; });
    return it == pairs.end() ? nullptr : &*it;
}

MetricReport aggregate(std::vector<PairMetrics> per_pair)
{
    if (per_pair.empty()) {
        throw UsageError("aggregate: no language pairs to average");
    }
    MetricReport report;
    std::sort(per_pair.begin(), per_pair.end(),
              [](const PairMetrics& a, const PairMetrics& b) { return a.pair < b.pair; });

    const auto average = [&](auto member, std::map<std::size_t, double>& macro,
                             std::map<std::size_t, double>& micro) {
        std::map<std::size_t, double> macro_sum, micro_sum;
        std::map<std::size_t, std::size_t> weight;
        for (const auto& p : per_pair) {
            for (const auto& [k, v] : p.*member) {
                macro_sum[k] += v;
                micro_sum[k] += v * static_cast<double>(p.query_count);
                weight[k] += p.query_count;
            }
        }
        for (const auto& [k, s] : macro_sum) {
            macro[k] = s / static_cast<double>(per_pair.size());
            micro[k] = weight[k] > 0 ? micro_sum[k] / static_cast<double>(weight[k]) : 0.0;
        }
    };
    average(&PairMetrics::recall, report.macro_recall, report.micro_recall);
    average(&PairMetrics::ndcg, report.macro_ndcg, report.micro_ndcg);
    for (const auto& p : per_pair) {
        report.total_queries += p.query_count;
    }
    report.pairs = std::move(per_pair);
    return report;
}

MetricReport evaluate(const RunList& run, const Judgments& qrels, const PairAssignment& pairs,
                      const EvalOptions& options)
{
    if (options.ks.empty()) {
        throw UsageError("evaluate: no cutoffs requested");
    }
    for (const auto& [qid, pair] : pairs) {
        if (qrels.has_query(qid) && run.find(qid) == nullptr) {
            throw DataError("judged query '" + qid + "' is missing from run '" + run.tag() + "'");
        }
    }
    std::map<LanguagePair, PairMetrics> grouped;
    for (const auto& r : run.results()) {
        const auto& pair = pair_of(r, qrels, pairs);
        auto& pm = grouped[pair];
        pm.pair = pair;
        ++pm.query_count;
        for (auto k : options.ks) {
            pm.recall[k] += query_recall_at_k(r.docs, qrels, r.query_id, k, options.min_grade);
            pm.ndcg[k] += query_ndcg_at_k(r.docs, qrels, r.query_id, k);
        }
    }
    std::vector<PairMetrics> per_pair;
    for (auto& [pair, pm] : grouped) {
        for (auto& [k, v] : pm.recall) {
            v /= static_cast<double>(pm.query_count);
        }
        for (auto& [k, v] : pm.ndcg) {
            v /= static_cast<double>(pm.query_count);
        }
        per_pair.push_back(std::move(pm));
    }
    return aggregate(std::move(per_pair));
}

namespace {

void put_metrics(nlohmann::ordered_json& rec, const std::map<std::size_t, double>& recall,
                 const std::map<std::size_t, double>& ndcg)
{
    for (const auto& [k, v] : recall) {
        rec["recall@" + std::to_string(k)] = v;
    }
    for (const auto& [k, v] : ndcg) {
        rec["ndcg@" + std::to_string(k)] = v;
    }
}

} // namespace

void write_report_records(std::ostream& out, const MetricReport& report,
                          const std::vector<std::string>& header)
{
    for (const auto& h : header) {
        out << "# " << h << '\n';
    }
    for (const auto& p : report.pairs) {
        nlohmann::ordered_json rec;
        rec["type"] = "pair";
        rec["pair"] = p.pair.label();
        rec["queries"] = p.query_count;
        put_metrics(rec, p.recall, p.ndcg);
        out << rec.dump() << '\n';
    }
    nlohmann::ordered_json macro;
    macro["type"] = "macro";
    macro["pairs"] = report.pairs.size();
    put_metrics(macro, report.macro_recall, report.macro_ndcg);
    out << macro.dump() << '\n';
    nlohmann::ordered_json micro;
    micro["type"] = "micro";
    micro["queries"] = report.total_queries;
    put_metrics(micro, report.micro_recall, report.micro_ndcg);
    out << micro.dump() << '\n';
}

void write_report_table(std::ostream& out, const MetricReport& report)
{
    std::string head = fmt::format("{:<10} {:>8}", "pair", "queries");
    for (const auto& [k, _] : report.macro_recall) {
        head += fmt::format(" {:>10}", "R@" + std::to_string(k));
    }
    for (const auto& [k, _] : report.macro_ndcg) {
        head += fmt::format(" {:>10}", "nDCG@" + std::to_string(k));
    }
    out << head << '\n' << std::string(head.size(), '-') << '\n';

    const auto row = [&](const std::string& label, std::size_t n,
                         const std::map<std::size_t, double>& recall,
                         const std::map<std::size_t, double>& ndcg) {
        out << fmt::format("{:<10} {:>8}", label, n);
        for (const auto& [_, v] : recall) {
            out << fmt::format(" {:>10.4f}", v);
        }
        for (const auto& [_, v] : ndcg) {
            out << fmt::format(" {:>10.4f}", v);
        }
        out << '\n';
    };
    for (const auto& p : report.pairs) {
        row(p.pair.label(), p.query_count, p.recall, p.ndcg);
    }
    out << std::string(head.size(), '-') << '\n';
    row("macro", report.pairs.size(), report.macro_recall, report.macro_ndcg);
    row("micro", report.total_queries, report.micro_recall, report.micro_ndcg);
}

std::map<LanguagePair, double> read_pair_recall(std::istream& in, std::size_t k,
                                                std::string_view source)
{
    const std::string key = "recall@" + std::to_string(k);
    std::map<LanguagePair, double> out;
    detail::for_each_record(in, source, [&](const nlohmann::ordered_json& rec,
                                            const std::string& where) {
        if (rec.value("type", "") != "pair") {
            return;
        }
        auto it = rec.find(key);
        if (it == rec.end() || !it->is_number()) {
            throw DataError(where + ": pair record lacks '" + key + "'");
        }
        out[LanguagePair::parse(rec.at("pair").get<std::string>())] = it->get<double>();
    });
    return out;
}

} // namespace clir::eval
