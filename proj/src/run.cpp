#include "clir/run.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "clir/error.hpp"
#include "line_reader.hpp"

namespace clir {

namespace {
constexpr std::string_view kNoResults = "# no-results ";
}

void RunList::add(QueryResult result)
{
    if (index_.contains(result.query_id)) {
        throw DataError("run '" + tag_ + "': query '" + result.query_id + "' appears twice");
    }
    std::unordered_map<std::string_view, int> seen;
    for (std::size_t i = 0; i < result.docs.size(); ++i) {
        if (!seen.emplace(result.docs[i].doc_id, 0).second) {
            throw DataError("run '" + tag_ + "': doc '" + result.docs[i].doc_id +
                            "' repeated for query '" + result.query_id + "'");
        }
        if (i > 0 && result.docs[i].score > result.docs[i - 1].score) {
            throw DataError("run '" + tag_ + "': scores increase at rank " + std::to_string(i + 1) +
                            " for query '" + result.query_id + "'");
        }
    }
    index_.emplace(result.query_id, results_.size());
    results_.push_back(std::move(result));
}

const QueryResult* RunList::find(std::string_view query_id) const
{
    auto it = index_.find(std::string(query_id));
    return it == index_.end() ? nullptr : &results_[it->second];
}

std::string format_score(double score)
{
    return fmt::format("{:.6f}", score);
}

void write_trec_run(std::ostream& out, const RunList& run, const std::vector<std::string>& header)
{
    for (const auto& h : header) {
        out << "# " << h << '\n';
    }
    const std::string tag = run.tag().empty() ? "clir" : run.tag();
    for (const auto& r : run.results()) {
        if (r.docs.empty()) {
            out << kNoResults << r.query_id << '\n';
            continue;
        }
        for (std::size_t i = 0; i < r.docs.size(); ++i) {
            out << r.query_id << " Q0 " << r.docs[i].doc_id << ' ' << (i + 1) << ' '
                << format_score(r.docs[i].score) << ' ' << tag << '\n';
        }
    }
}

void write_trec_run(const std::filesystem::path& path, const RunList& run,
                    const std::vector<std::string>& header)
{
    auto out = detail::open_output(path);
    write_trec_run(out, run, header);
}

RunList parse_trec_run(std::istream& in, std::string_view source)
{
    struct Row {
        long rank;
        ScoredDoc doc;
    };
    std::vector<std::string> order;
    std::map<std::string, std::vector<Row>> rows;
    std::string tag;

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.starts_with(kNoResults)) {
            std::string qid = line.substr(kNoResults.size());
            if (rows.emplace(qid, std::vector<Row>{}).second) {
                order.push_back(qid);
            }
            continue;
        }
        auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') {
            continue;
        }
        std::istringstream fields(line);
        std::string qid, q0, did, rank_text, score_text, row_tag;
        if (!(fields >> qid >> q0 >> did >> rank_text >> score_text >> row_tag)) {
            throw DataError(std::string(source) + ":" + std::to_string(lineno) +
                            ": expected 'query_id Q0 doc_id rank score tag'");
        }
        Row row;
        try {
            row.rank = std::stol(rank_text);
            row.doc = {did, std::stod(score_text)};
        } catch (const std::logic_error&) {
            throw DataError(std::string(source) + ":" + std::to_string(lineno) +
                            ": bad rank or score");
        }
        if (tag.empty()) {
            tag = row_tag;
        }
        auto [it, inserted] = rows.emplace(qid, std::vector<Row>{});
        if (inserted) {
            order.push_back(qid);
        }
        it->second.push_back(std::move(row));
    }

    RunList run(tag);
    for (const auto& qid : order) {
        auto& list = rows[qid];
        std::stable_sort(list.begin(), list.end(),
                         [](const Row& a, const Row& b) { return a.rank < b.rank; });
        QueryResult r{qid, {}, std::nullopt};
        r.docs.reserve(list.size());
        for (auto& row : list) {
            r.docs.push_back(std::move(row.doc));
        }
        try {
            run.add(std::move(r));
        } catch (const DataError& e) {
            throw DataError(std::string(source) + ": " + e.what());
        }
    }
    return run;
}

RunList read_trec_run(const std::filesystem::path& path)
{
    auto in = detail::open_input(path);
    return parse_trec_run(in, path.string());
}

} // namespace clir
