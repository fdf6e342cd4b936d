#include <gtest/gtest.h>

#include <sstream>

#include "clir/error.hpp"
#include "clir/run.hpp"

using namespace clir;

TEST(RunList, RejectsDuplicatesAndIncreasingScores)
{
    RunList run("t");
    run.add({"q1", {{"a", 2.0}, {"b", 1.0}}, {}});
    EXPECT_THROW(run.add({"q1", {}, {}}), DataError);
    EXPECT_THROW(run.add({"q2", {{"a", 2.0}, {"a", 1.0}}, {}}), DataError);
    EXPECT_THROW(run.add({"q3", {{"a", 1.0}, {"b", 2.0}}, {}}), DataError);
    EXPECT_NO_THROW(run.add({"q4", {{"a", 1.0}, {"b", 1.0}}, {}}));
    EXPECT_EQ(run.size(), 2u);
    ASSERT_NE(run.find("q4"), nullptr);
    EXPECT_EQ(run.find("missing"), nullptr);
}

TEST(TrecRun, WriteFormat)
{
    RunList run("bm25");
    run.add({"q1", {{"d3", 2.5}, {"d1", 0.125}}, {}});
    std::ostringstream out;
    write_trec_run(out, run, {"seed=42"});
    EXPECT_EQ(out.str(), "# seed=42\n"
                         "q1 Q0 d3 1 2.500000 bm25\n"
                         "q1 Q0 d1 2 0.125000 bm25\n");
}

TEST(TrecRun, RoundTripIncludingEmptyLists)
{
    RunList run("dense");
    run.add({"q1", {{"d3", 0.75}, {"d1", 0.5}, {"d2", 0.5}}, {}});
    run.add({"q2", {}, {}});
    run.add({"q0", {{"d9", -0.25}}, {}});
    std::stringstream io;
    write_trec_run(io, run);
    const RunList back = parse_trec_run(io);
    EXPECT_EQ(back, run);
}

TEST(TrecRun, RowsReorderedByRank)
{
    std::istringstream in("q1 Q0 b 2 1.0 t\nq1 Q0 a 1 2.0 t\n");
    const RunList run = parse_trec_run(in);
    ASSERT_EQ(run.results().size(), 1u);
    EXPECT_EQ(run.results()[0].docs[0].doc_id, "a");
}

TEST(TrecRun, MalformedRows)
{
    std::istringstream short_row("q1 Q0 a 1 2.0\n");
    EXPECT_THROW(parse_trec_run(short_row), DataError);
    std::istringstream bad_score("q1 Q0 a 1 abc t\n");
    EXPECT_THROW(parse_trec_run(bad_score), DataError);
}

TEST(FormatScore, SixDecimals)
{
    EXPECT_EQ(format_score(1.0), "1.000000");
    EXPECT_EQ(format_score(-0.0000004), "-0.000000");
    EXPECT_EQ(format_score(12.3456789), "12.345679");
}
