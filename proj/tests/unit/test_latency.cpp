#include <gtest/gtest.h>

#include <sstream>
#include <stdexcept>

#include "clir/dense_search.hpp"
#include "clir/hnsw.hpp"
#include "clir/latency.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace clir;
using namespace clir::bench;

namespace {

LatencyTrace alternating(const std::vector<double>& stamps, int pair_count,
                         Method first = Method::exact)
{
    LatencyTrace t;
    t.pair_count = pair_count;
    const Method second = first == Method::exact ? Method::ann : Method::exact;
    for (std::size_t i = 0; i < stamps.size(); ++i) {
        const LanguagePair pair{"en", i / 2 == 0 ? "de" : "fr" + std::to_string(i / 2)};
        t.entries.push_back({pair, i % 2 == 0 ? first : second, stamps[i], 0.001 * (i + 1)});
    }
    return t;
}

std::vector<PairWorkload> workloads(std::size_t pairs, std::size_t per_pair, std::size_t dim)
{
    std::vector<PairWorkload> out;
    for (std::size_t p = 0; p < pairs; ++p) {
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < per_pair; ++i) {
            ids.push_back("q" + std::to_string(p) + "-" + std::to_string(i));
        }
        out.push_back({{"en", "l" + std::to_string(p)},
                       test::random_unit_matrix(per_pair, dim, 100 + p),
                       dense::IdMap(ids)});
    }
    return out;
}

} // namespace

TEST(Normalize, HandWorkedFixture)
{
    const auto rep = normalize_and_summarize(alternating({0, 1, 2, 3}, 2));
    ASSERT_EQ(rep.normalized.size(), 4u);
    EXPECT_NEAR(rep.normalized[0], 0.0, 1e-12);
    EXPECT_NEAR(rep.normalized[1], 2.0 / 3, 1e-12);
    EXPECT_NEAR(rep.normalized[2], 4.0 / 3, 1e-12);
    EXPECT_NEAR(rep.normalized[3], 2.0, 1e-12);
    EXPECT_NEAR(rep.mean_exact_to_ann, 2.0 / 3, 1e-12);
    EXPECT_NEAR(rep.mean_ann_to_exact, 2.0 / 3, 1e-12);
    EXPECT_NEAR(rep.mean_difference, 2.0 / 3, 1e-12);
    EXPECT_FALSE(rep.degenerate);
}

TEST(Normalize, DegenerateTrace)
{
    const auto rep = normalize_and_summarize(alternating({5, 5, 5, 5}, 2));
    EXPECT_TRUE(rep.degenerate);
    EXPECT_EQ(rep.mean_exact_to_ann, 0.0);
    EXPECT_EQ(rep.mean_ann_to_exact, 0.0);
    EXPECT_EQ(rep.mean_difference, 0.0);
}

TEST(Normalize, SinglePair)
{
    const auto rep = normalize_and_summarize(alternating({1.0, 3.0}, 1));
    EXPECT_EQ(rep.normalized, (std::vector<double>{0.0, 1.0}));
    EXPECT_EQ(rep.mean_exact_to_ann, 1.0);
    EXPECT_EQ(rep.mean_difference, 1.0);
}

TEST(Normalize, SwappingLabelsNegates)
{
    const std::vector<double> stamps{0.0, 0.7, 0.9, 2.5, 2.6, 4.0};
    const auto a = normalize_and_summarize(alternating(stamps, 3, Method::exact));
    const auto b = normalize_and_summarize(alternating(stamps, 3, Method::ann));
    EXPECT_EQ(a.mean_exact_to_ann, -b.mean_exact_to_ann);
    EXPECT_EQ(a.mean_ann_to_exact, -b.mean_ann_to_exact);
    EXPECT_EQ(a.mean_difference, -b.mean_difference);
}

TEST(Normalize, BoundsScaleWithPresets)
{
    for (const char* name : {"clirmatrix", "mmarco", "large-scale"}) {
        const int pairs = dataset_preset(name).pair_count;
        const auto rep = normalize_and_summarize(alternating({0.5, 0.8, 1.1, 1.2, 2.0, 7.0}, pairs));
        EXPECT_EQ(rep.normalized.front(), 0.0);
        EXPECT_EQ(rep.normalized.back(), pairs);
        for (double v : rep.normalized) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, pairs);
        }
    }
    EXPECT_EQ(dataset_preset("clirmatrix").pair_count, 56);
    EXPECT_EQ(dataset_preset("mmarco").pair_count, 196);
    EXPECT_EQ(dataset_preset("large-scale").pair_count, 26);
}

TEST(Normalize, Errors)
{
    EXPECT_THROW(normalize_and_summarize(alternating({1.0}, 1)), DataError);
    EXPECT_THROW(normalize_and_summarize(alternating({1.0, 2.0}, 0)), UsageError);
    EXPECT_THROW(normalize_and_summarize(alternating({2.0, 1.0}, 1)), DataError);
}

TEST(ValidateTrace, Alternation)
{
    auto t = alternating({0, 1, 2, 3}, 2);
    EXPECT_NO_THROW(validate_trace(t));
    t.entries[2].method = Method::ann;
    EXPECT_THROW(validate_trace(t), DataError);
    auto mixed = alternating({0, 1, 2, 3}, 2);
    mixed.entries[1].pair = {"en", "zz"};
    EXPECT_THROW(validate_trace(mixed), DataError);
    EXPECT_THROW(validate_trace(alternating({0, 1, 2}, 2)), DataError);
}

TEST(Interleaved, TimestampCountsAndOrder)
{
    const auto docs = test::random_unit_matrix(300, 16, 1);
    const auto doc_ids = test::numbered_ids(300, "d");
    const Engine exact_engine = [&](const PairWorkload& w) {
        return dense::to_run(dense::exact_topk(w.queries, docs, 10), w.query_ids, doc_ids, "exact");
    };
    for (std::size_t pairs : {1u, 3u}) {
        const auto w = workloads(pairs, 4, 16);
        const auto run = run_interleaved(w, exact_engine, exact_engine);
        ASSERT_EQ(run.trace.entries.size(), 2 * pairs);
        for (std::size_t i = 0; i < run.trace.entries.size(); ++i) {
            EXPECT_EQ(run.trace.entries[i].method, i % 2 == 0 ? Method::exact : Method::ann);
            EXPECT_EQ(run.trace.entries[i].pair, w[i / 2].pair);
        }
        EXPECT_NO_THROW(validate_trace(run.trace));
        EXPECT_EQ(run.trace.pair_count, static_cast<int>(pairs));
    }
}

TEST(Interleaved, TenPairRecallGap)
{
    const auto docs = test::random_unit_matrix(2000, 32, 2);
    const auto doc_ids = test::numbered_ids(2000, "d");
    ann::HnswParams params;
    params.M = 4;
    params.ef_construction = 20;
    const auto index = ann::HnswIndex::build(docs, doc_ids, params, 5);
    const Engine exact = [&](const PairWorkload& w) {
        return dense::to_run(dense::exact_topk(w.queries, docs, 50), w.query_ids, doc_ids, "exact");
    };
    const Engine approx = [&](const PairWorkload& w) {
        return dense::to_run(index.search_all(w.queries, 50, 50), w.query_ids, doc_ids,
                             "ann");
    };
    const auto w = workloads(10, 5, 32);
    const auto run = run_interleaved(w, exact, approx, 56);
    ASSERT_EQ(run.exact_runs.size(), 10u);
    ASSERT_EQ(run.ann_runs.size(), 10u);
    double total = 0.0;
    for (std::size_t p = 0; p < 10; ++p) {
        EXPECT_EQ(run.exact_runs[p].size(), 5u);
        // Exact run equals the brute-force oracle; ANN overlap is a fraction of it.
        for (std::size_t q = 0; q < 5; ++q) {
            const auto expect = test::oracle::dense_rank(docs, w[p].queries.row(q));
            EXPECT_EQ(run.exact_runs[p].results()[q].docs[0].doc_id, doc_ids[expect[0].row]);
        }
        const double o = mean_overlap(run.exact_runs[p], run.ann_runs[p], 50);
        EXPECT_GE(o, 0.0);
        EXPECT_LE(o, 1.0);
        total += o;
    }
    EXPECT_GT(total / 10, 0.5);
    const auto rep = normalize_and_summarize(run.trace);
    EXPECT_EQ(rep.pair_count, 56);
    for (double v : rep.normalized) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 56.0);
    }
}

TEST(Interleaved, EngineFailureKeepsPartialTrace)
{
    int calls = 0;
    const Engine ok = [](const PairWorkload&) { return RunList("x"); };
    const Engine flaky = [&](const PairWorkload& w) {
        if (w.pair.doc_lang == "l2") {
            throw std::runtime_error("boom");
        }
        ++calls;
        return RunList("x");
    };
    const auto w = workloads(4, 2, 8);
    try {
        run_interleaved(w, ok, flaky, 0, false);
        FAIL();
    } catch (const InterleaveError& e) {
        EXPECT_EQ(e.partial().entries.size(), 5u);
        EXPECT_NE(std::string(e.what()).find("en-l2"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("boom"), std::string::npos);
    }
    EXPECT_EQ(calls, 2);
}

TEST(Overlap, Definition)
{
    RunList exact("e");
    exact.add({"q1", {{"a", 3}, {"b", 2}, {"c", 1}}, {}});
    exact.add({"q2", {{"x", 1}}, {}});
    RunList ann("a");
    ann.add({"q1", {{"a", 3}, {"z", 2}, {"b", 1}}, {}});
    ann.add({"q2", {{"y", 1}}, {}});
    EXPECT_NEAR(mean_overlap(exact, ann, 3), (2.0 / 3 + 0.0) / 2, 1e-12);
    EXPECT_NEAR(mean_overlap(exact, ann, 1), 0.5, 1e-12);
    EXPECT_EQ(mean_overlap(exact, exact, 3), 1.0);
}

TEST(LatencyReport, RecordsAndTable)
{
    const auto rep = normalize_and_summarize(alternating({0, 1, 2, 3}, 2));
    RecallComparison rc;
    rc.ann_overlap = 0.97;
    rc.exact_recall = 0.5;
    std::ostringstream rec;
    write_latency_records(rec, "toy", rep, rc, {"seed=1"});
    EXPECT_NE(rec.str().find("\"pair_count\":2"), std::string::npos) << rec.str();
    EXPECT_NE(rec.str().find("\"ann_recall\":null"), std::string::npos);
    std::ostringstream table;
    write_latency_table(table, "toy", rep, rc);
    EXPECT_NE(table.str().find("R@100"), std::string::npos);
    EXPECT_NE(table.str().find("0.6667"), std::string::npos) << table.str();
}
