#include <gtest/gtest.h>

#include <cmath>
#include <queue>
#include <set>

#include "clir/dense_search.hpp"
#include "clir/error.hpp"
#include "clir/hnsw.hpp"
#include "fixtures.hpp"

using namespace clir;
using namespace clir::ann;

namespace {

HnswIndex build_random(std::size_t n, std::size_t dim, std::uint64_t seed, HnswParams p = {})
{
    return HnswIndex::build(test::random_unit_matrix(n, dim, seed), test::numbered_ids(n, "d"), p,
                            seed);
}

double overlap(const std::vector<Hit>& a, const std::vector<Hit>& b)
{
    std::set<std::uint32_t> rows;
    for (const auto& h : a) {
        rows.insert(h.row);
    }
    std::size_t common = 0;
    for (const auto& h : b) {
        common += rows.count(h.row);
    }
    return static_cast<double>(common) / static_cast<double>(b.size());
}

void check_structure(const HnswIndex& index)
{
    const auto& p = index.params();
    for (std::uint32_t node = 0; node < index.size(); ++node) {
        ASSERT_GE(index.level(node), 0);
        ASSERT_LE(index.level(node), index.max_level());
        for (int layer = 0; layer <= index.level(node); ++layer) {
            const auto nbrs = index.neighbors(node, layer);
            ASSERT_LE(nbrs.size(), p.max_degree(static_cast<std::size_t>(layer)))
                << "node " << node << " layer " << layer;
            std::set<std::uint32_t> seen;
            for (auto n : nbrs) {
                ASSERT_LT(n, index.size());
                ASSERT_NE(n, node);
                ASSERT_GE(index.level(n), layer);
                ASSERT_TRUE(seen.insert(n).second);
            }
        }
    }
    ASSERT_EQ(index.level(index.entry_point()), index.max_level());
}

std::size_t reachable_at_base(const HnswIndex& index)
{
    std::vector<bool> seen(index.size(), false);
    std::queue<std::uint32_t> todo;
    todo.push(index.entry_point());
    seen[index.entry_point()] = true;
    std::size_t count = 1;
    while (!todo.empty()) {
        const auto node = todo.front();
        todo.pop();
        for (auto n : index.neighbors(node, 0)) {
            if (!seen[n]) {
                seen[n] = true;
                ++count;
                todo.push(n);
            }
        }
    }
    return count;
}

} // namespace

TEST(HnswParams, DefaultsAndEfRule)
{
    const HnswParams p;
    EXPECT_EQ(p.M, 16u);
    EXPECT_EQ(p.ef_construction, 200u);
    EXPECT_NEAR(p.effective_level_multiplier(), 1.0 / std::log(16.0), 1e-15);
    EXPECT_EQ(adaptive_ef(100), 200u);
    EXPECT_EQ(adaptive_ef(10), 50u);
    EXPECT_EQ(adaptive_ef(25), 50u);
    EXPECT_EQ(adaptive_ef(26), 52u);
    EXPECT_EQ(p.ef_for(100), 200u);
    HnswParams fixed;
    fixed.ef_search = 64;
    EXPECT_EQ(fixed.ef_for(10), 64u);
    EXPECT_EQ(fixed.ef_for(100), 100u);
    EXPECT_EQ(p.max_degree(0), 32u);
    EXPECT_EQ(p.max_degree(3), 16u);
}

TEST(HnswParams, Validation)
{
    HnswParams p;
    p.M = 1;
    EXPECT_THROW(p.validate(), UsageError);
    p = {};
    p.ef_construction = 0;
    EXPECT_THROW(p.validate(), UsageError);
    p = {};
    p.level_multiplier = -1.0;
    EXPECT_THROW(p.validate(), UsageError);
}

TEST(HnswBuild, SingleDocument)
{
    const auto index = build_random(1, 8, 1);
    EXPECT_EQ(index.size(), 1u);
    EXPECT_EQ(index.entry_point(), 0u);
    const auto hits = index.search(index.vectors().row(0), 1, 1);
    ASSERT_EQ(hits.size(), 1u);
    EXPECT_EQ(hits[0].row, 0u);
}

TEST(HnswBuild, EmptyRejected)
{
    EXPECT_THROW(HnswIndex::build(dense::EmbeddingMatrix(0, 8, {}), dense::IdMap{}, {}, 1),
                 UsageError);
    EXPECT_THROW(HnswIndex::build(test::random_unit_matrix(3, 8, 1), test::numbered_ids(2, "d"),
                                  {}, 1),
                 DataError);
}

TEST(HnswBuild, ConnectedAtBaseLayer)
{
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto index = build_random(100, 16, seed);
        EXPECT_EQ(reachable_at_base(index), 100u) << seed;
    }
    const auto big = build_random(3000, 32, 9);
    EXPECT_EQ(reachable_at_base(big), 3000u);
}

TEST(HnswBuild, DeterministicUnderSeed)
{
    const auto a = build_random(500, 16, 3);
    const auto b = build_random(500, 16, 3);
    EXPECT_EQ(a, b);
    const auto c = HnswIndex::build(a.vectors(), a.ids(), {}, 4);
    EXPECT_NE(a, c);
}

TEST(HnswBuild, StructuralInvariantsAcrossParameters)
{
    std::uint64_t seed = 20;
    for (std::size_t M : {2u, 4u, 16u}) {
        for (auto sel : {NeighborSelection::simple, NeighborSelection::heuristic}) {
            for (bool wide : {true, false}) {
                HnswParams p;
                p.M = M;
                p.ef_construction = 40;
                p.selection = sel;
                p.wide_base_links = wide;
                const auto index = build_random(400, 12, ++seed, p);
                check_structure(index);
                // Pruning can orphan nodes when the degree budget is tiny.
                if (M >= 16) {
                    EXPECT_EQ(reachable_at_base(index), 400u)
                        << "heuristic=" << (sel == NeighborSelection::heuristic)
                        << " wide=" << wide;
                }
            }
        }
    }
}

TEST(HnswBuild, LevelDistributionFollowsMultiplier)
{
    // P(level >= 1) = exp(-1 / mL) = 1 / M for the default multiplier.
    const auto index = build_random(10000, 8, 5, [] {
        HnswParams p;
        p.ef_construction = 20;
        return p;
    }());
    std::size_t upper = 0;
    for (std::uint32_t i = 0; i < index.size(); ++i) {
        upper += index.level(i) >= 1 ? 1 : 0;
    }
    const double expected = 10000.0 / 16.0;
    const double sd = std::sqrt(10000.0 * (1.0 / 16) * (15.0 / 16));
    EXPECT_NEAR(static_cast<double>(upper), expected, 5 * sd);
}

TEST(HnswSearch, IdentityWithExhaustiveEf)
{
    const auto index = build_random(300, 16, 2);
    for (std::uint32_t j : {0u, 150u, 299u}) {
        const auto hits = index.search(index.vectors().row(j), 10, index.size());
        EXPECT_EQ(hits[0].row, j);
        EXPECT_NEAR(hits[0].score, 1.0, 1e-6);
    }
}

TEST(HnswSearch, ExhaustiveEfEqualsExact)
{
    for (std::size_t n : {50u, 500u, 2000u}) {
        const auto docs = test::random_unit_matrix(n, 32, n);
        const auto index = HnswIndex::build(docs, test::numbered_ids(n, "d"), {}, 7);
        const auto queries = test::random_unit_matrix(40, 32, n + 1);
        const std::size_t k = std::min<std::size_t>(100, n);
        const auto exact = dense::exact_topk(queries, docs, k);
        const auto approx = index.search_all(queries, k, n);
        EXPECT_EQ(approx, exact) << "n = " << n;
    }
}

TEST(HnswSearch, RecallNonDecreasingInEf)
{
    const auto docs = test::random_unit_matrix(4000, 32, 31);
    HnswParams p;
    p.M = 8;
    p.ef_construction = 60;
    const auto index = HnswIndex::build(docs, test::numbered_ids(4000, "d"), p, 3);
    const auto queries = test::random_unit_matrix(100, 32, 32);
    const auto exact = dense::exact_topk(queries, docs, 20);
    double previous = 0.0;
    for (std::size_t ef : {20u, 40u, 80u, 160u, 400u, 4000u}) {
        const auto approx = index.search_all(queries, 20, ef);
        double total = 0.0;
        for (std::size_t q = 0; q < queries.rows(); ++q) {
            total += overlap(approx[q], exact[q]);
        }
        const double mean = total / static_cast<double>(queries.rows());
        EXPECT_GE(mean, previous) << "ef = " << ef;
        previous = mean;
    }
    EXPECT_EQ(previous, 1.0);
}

TEST(HnswSearch, ResultsSortedAndScoresAreDots)
{
    const auto index = build_random(600, 16, 8);
    const auto queries = test::random_unit_matrix(10, 16, 9);
    for (const auto& hits : index.search_all(queries, 30, 60)) {
        ASSERT_EQ(hits.size(), 30u);
        for (std::size_t i = 1; i < hits.size(); ++i) {
            EXPECT_TRUE(ranks_before(hits[i - 1], hits[i]));
        }
    }
    const auto hits = index.search(queries.row(0), 5, 50);
    for (const auto& h : hits) {
        EXPECT_EQ(static_cast<float>(h.score), dense::dot(queries.row(0), index.vectors().row(h.row)));
    }
}

TEST(HnswSearch, ParallelMatchesSerial)
{
    const auto index = build_random(1000, 16, 4);
    const auto queries = test::random_unit_matrix(64, 16, 5);
    EXPECT_EQ(index.search_all(queries, 10, 50), index.search_all_serial(queries, 10, 50));
}

TEST(HnswSearch, Errors)
{
    const auto index = build_random(20, 8, 1);
    const auto q = test::random_unit_matrix(1, 8, 2);
    EXPECT_THROW(index.search(q.row(0), 10, 5), UsageError);
    EXPECT_THROW(index.search(q.row(0), 0, 5), UsageError);
    const auto wrong = test::random_unit_matrix(1, 4, 2);
    EXPECT_THROW(index.search(wrong.row(0), 1, 5), DataError);
}

TEST(HnswSearch, KLargerThanCorpus)
{
    const auto index = build_random(15, 8, 1);
    const auto q = test::random_unit_matrix(1, 8, 2);
    EXPECT_EQ(index.search(q.row(0), 50, 50).size(), 15u);
}

TEST(HnswFile, RoundTripPreservesSearchAndMetadata)
{
    HnswParams p;
    p.M = 12;
    p.ef_construction = 100;
    p.ef_search = 77;
    p.selection = NeighborSelection::heuristic;
    const auto docs = test::random_unit_matrix(800, 24, 6);
    const auto index = HnswIndex::build(docs, test::numbered_ids(800, "doc-"), p, 99, "toy-encoder");
    test::TempDir dir;
    index.save(dir / "i.clrh");
    const auto back = HnswIndex::load(dir / "i.clrh");
    EXPECT_EQ(back, index);
    EXPECT_EQ(back.dim(), 24u);
    EXPECT_EQ(back.params(), p);
    EXPECT_EQ(back.seed(), 99u);
    EXPECT_EQ(back.model_name(), "toy-encoder");
    EXPECT_EQ(back.ids(), index.ids());
    const auto probes = test::random_unit_matrix(50, 24, 7);
    EXPECT_EQ(back.search_all(probes, 10, 40), index.search_all(probes, 10, 40));
}

TEST(HnswFile, CorruptionDetected)
{
    const auto bytes = build_random(200, 8, 3).serialize();
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "CLRH");
    const std::vector<unsigned char> truncated(bytes.begin(), bytes.begin() + bytes.size() / 2);
    EXPECT_THROW(HnswIndex::deserialize(truncated), DataError);
    auto flipped = bytes;
    flipped[bytes.size() / 3] ^= 0x01;
    EXPECT_THROW(HnswIndex::deserialize(flipped), DataError);
    auto version = bytes;
    version[4] = 7;
    try {
        HnswIndex::deserialize(version);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
    }
    test::TempDir dir;
    test::write_file(dir / "t.clrh", std::string(truncated.begin(), truncated.end()));
    EXPECT_THROW(HnswIndex::load(dir / "t.clrh"), DataError);
}
