#include "clir/rerank.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <random>
#include <set>

#include "json.hpp"

#include "clir/error.hpp"
#include "line_reader.hpp"

namespace clir::rerank {

using nlohmann::ordered_json;

std::vector<CandidateSet> make_candidates(const RunList& run, const Judgments& qrels,
                                          std::size_t depth, int min_grade)
{
    if (depth < 1) {
        throw UsageError("make_candidates: depth must be >= 1");
    }
    for (const auto& qid : qrels.query_ids()) {
        if (qrels.gold(qid, min_grade) && run.find(qid) == nullptr) {
            throw DataError("judged query '" + qid + "' is missing from the first-stage run");
        }
    }

    std::vector<CandidateSet> out;
    out.reserve(run.size());
    for (const auto& r : run.results()) {
        const auto gold = qrels.gold(r.query_id, min_grade);
        if (!gold) {
            throw DataError("query '" + r.query_id + "' has no relevant document in qrels");
        }
        CandidateSet set;
        set.query_id = r.query_id;
        const std::size_t keep = std::min(depth, r.docs.size());
        bool has_gold = false;
        for (std::size_t i = 0; i < keep; ++i) {
            set.doc_ids.push_back(r.docs[i].doc_id);
            has_gold = has_gold || qrels.grade(r.query_id, r.docs[i].doc_id) >= min_grade;
        }
        if (!has_gold) {
            if (set.doc_ids.size() == depth) {
                set.doc_ids.back() = *gold;
            } else {
                set.doc_ids.push_back(*gold);
            }
            set.injected = *gold;
        }
        for (std::size_t i = 0; i < set.doc_ids.size(); ++i) {
            set.first_stage_ranks.emplace(set.doc_ids[i], i + 1);
        }
        out.push_back(std::move(set));
    }
    return out;
}

NegativeMode parse_negative_mode(std::string_view name)
{
    if (name == "easy") {
        return NegativeMode::easy;
    }
    if (name == "hard") {
        return NegativeMode::hard;
    }
    throw UsageError("negative mode must be 'easy' or 'hard', got '" + std::string(name) + "'");
}

std::string_view to_string(NegativeMode mode)
{
    return mode == NegativeMode::easy ? "easy" : "hard";
}

std::vector<TrainingPair> sample_negatives(const Query& query, const Judgments& qrels,
                                           const Corpus& corpus,
                                           const QueryResult* first_stage, NegativeMode mode,
                                           std::size_t m, std::uint64_t seed, TextField field,
                                           int min_grade)
{
    if (m < 1) {
        throw UsageError("sample_negatives: m must be >= 1");
    }
    std::vector<std::size_t> chosen;
    if (mode == NegativeMode::easy) {
        std::vector<std::size_t> eligible;
        for (std::size_t row = 0; row < corpus.size(); ++row) {
            if (qrels.grade(query.query_id, corpus[row].doc_id) < min_grade) {
                eligible.push_back(row);
            }
        }
        if (eligible.size() < m) {
            throw DataError("query '" + query.query_id + "': only " +
                            std::to_string(eligible.size()) + " easy negatives available, " +
                            std::to_string(m) + " requested");
        }
        std::mt19937_64 rng(seed);
        std::sample(eligible.begin(), eligible.end(), std::back_inserter(chosen), m, rng);
    } else {
        if (first_stage == nullptr) {
            throw UsageError("hard negatives need a first-stage run");
        }
        for (const auto& d : first_stage->docs) {
            if (chosen.size() == m) {
                break;
            }
            if (qrels.grade(query.query_id, d.doc_id) >= min_grade) {
                continue;
            }
            auto row = corpus.row_of(d.doc_id);
            if (!row) {
                throw DataError("first-stage doc '" + d.doc_id + "' is not in the corpus");
            }
            chosen.push_back(*row);
        }
        if (chosen.size() < m) {
            throw DataError("query '" + query.query_id + "': only " +
                            std::to_string(chosen.size()) + " hard negatives available, " +
                            std::to_string(m) + " requested");
        }
    }

    std::vector<TrainingPair> out;
    out.reserve(chosen.size());
    for (auto row : chosen) {
        const auto& doc = corpus[row];
        out.push_back({query.query_id, query.text, doc.doc_id, field_text(doc, field), 0, mode});
    }
    return out;
}

namespace {

std::uint64_t query_seed(std::uint64_t seed, std::string_view query_id)
{
    std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
    for (unsigned char c : query_id) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace

std::vector<TrainingPair> build_training_pairs(const QuerySet& queries, const Judgments& qrels,
                                               const Corpus& corpus, const RunList* first_stage,
                                               NegativeMode mode, std::size_t m,
                                               std::uint64_t seed, TextField field,
                                               int min_grade)
{
    std::vector<TrainingPair> out;
    for (const auto& q : queries.queries()) {
        const auto relevant = qrels.relevant(q.query_id, min_grade);
        if (relevant.empty()) {
            continue;
        }
        for (const auto& doc_id : relevant) {
            const auto* doc = corpus.find(doc_id);
            if (doc == nullptr) {
                throw DataError("relevant doc '" + doc_id + "' of query '" + q.query_id +
                                "' is not in the corpus");
            }
            out.push_back({q.query_id, q.text, doc_id, field_text(*doc, field), 1, mode});
        }
        const QueryResult* stage = nullptr;
        if (mode == NegativeMode::hard) {
            if (first_stage == nullptr) {
                throw UsageError("hard negatives need a first-stage run");
            }
            stage = first_stage->find(q.query_id);
            if (stage == nullptr) {
                throw DataError("query '" + q.query_id + "' is missing from the first-stage run");
            }
        }
        auto negatives = sample_negatives(q, qrels, corpus, stage, mode, m,
                                          query_seed(seed, q.query_id), field, min_grade);
        std::move(negatives.begin(), negatives.end(), std::back_inserter(out));
    }
    return out;
}

QueryResult apply_external_scores(const CandidateSet& candidates, const ScoreMap& scores)
{
    struct Scored {
        std::string doc_id;
        double score;
        std::size_t rank;
    };
    std::vector<Scored> items;
    items.reserve(candidates.doc_ids.size());
    for (std::size_t i = 0; i < candidates.doc_ids.size(); ++i) {
        const auto& doc = candidates.doc_ids[i];
        auto it = scores.find({candidates.query_id, doc});
        if (it == scores.end()) {
            throw DataError("missing external score for (" + candidates.query_id + ", " + doc +
                            ")");
        }
        auto rank = candidates.first_stage_ranks.find(doc);
        items.push_back(
            {doc, it->second, rank != candidates.first_stage_ranks.end() ? rank->second : i + 1});
    }
    std::sort(items.begin(), items.end(), [](const Scored& a, const Scored& b) {
        return a.score > b.score || (a.score == b.score && a.rank < b.rank);
    });
    QueryResult out{candidates.query_id, {}, std::nullopt};
    out.docs.reserve(items.size());
    for (auto& s : items) {
        out.docs.push_back({std::move(s.doc_id), s.score});
    }
    return out;
}

std::vector<ScoringRequest> scoring_requests(const std::vector<CandidateSet>& candidates,
                                             const QuerySet& queries, const Corpus& corpus,
                                             TextField field)
{
    std::vector<ScoringRequest> out;
    for (const auto& set : candidates) {
        const auto* q = queries.find(set.query_id);
        if (q == nullptr) {
            throw DataError("candidate query '" + set.query_id + "' is not in the query set");
        }
        for (const auto& doc_id : set.doc_ids) {
            const auto* doc = corpus.find(doc_id);
            if (doc == nullptr) {
                throw DataError("candidate doc '" + doc_id + "' is not in the corpus");
            }
            out.push_back({q->query_id, doc_id, q->text, field_text(*doc, field)});
        }
    }
    return out;
}

namespace {

std::string get_string(const ordered_json& rec, const char* field, const std::string& where)
{
    auto it = rec.find(field);
    if (it == rec.end() || !it->is_string()) {
        throw DataError(where + ": missing string field '" + field + "'");
    }
    return it->get<std::string>();
}

} // namespace

void write_scoring_requests(std::ostream& out, const std::vector<ScoringRequest>& requests)
{
    for (const auto& r : requests) {
        ordered_json rec;
        rec["query_id"] = r.query_id;
        rec["doc_id"] = r.doc_id;
        rec["query_text"] = r.query_text;
        rec["doc_text"] = r.doc_text;
        out << rec.dump() << '\n';
    }
}

std::vector<ScoringRequest> parse_scoring_requests(std::istream& in, std::string_view source)
{
    std::vector<ScoringRequest> out;
    detail::for_each_record(in, source, [&](const ordered_json& rec, const std::string& where) {
        out.push_back({get_string(rec, "query_id", where), get_string(rec, "doc_id", where),
                       get_string(rec, "query_text", where), get_string(rec, "doc_text", where)});
    });
    return out;
}

ScoreMap parse_scores(std::istream& in, std::string_view source)
{
    ScoreMap scores;
    detail::for_each_record(in, source, [&](const ordered_json& rec, const std::string& where) {
        ScoreKey key{get_string(rec, "query_id", where), get_string(rec, "doc_id", where)};
        auto it = rec.find("score");
        if (it == rec.end() || !it->is_number()) {
            throw DataError(where + ": missing numeric field 'score'");
        }
        const double score = it->get<double>();
        auto [pos, inserted] = scores.emplace(key, score);
        if (!inserted && pos->second != score) {
            throw DataError(where + ": conflicting scores for (" + key.first + ", " + key.second +
                            ")");
        }
    });
    return scores;
}

ScoreMap read_scores(const std::filesystem::path& path)
{
    auto in = detail::open_input(path);
    return parse_scores(in, path.string());
}

void write_scores(std::ostream& out, const ScoreMap& scores)
{
    for (const auto& [key, score] : scores) {
        ordered_json rec;
        rec["query_id"] = key.first;
        rec["doc_id"] = key.second;
        rec["score"] = score;
        out << rec.dump() << '\n';
    }
}

void write_training_pairs(std::ostream& out, const std::vector<TrainingPair>& pairs)
{
    for (const auto& p : pairs) {
        ordered_json rec;
        rec["query_id"] = p.query_id;
        rec["doc_id"] = p.doc_id;
        rec["query_text"] = p.query_text;
        rec["doc_text"] = p.doc_text;
        rec["label"] = p.label;
        rec["difficulty"] = std::string(to_string(p.difficulty));
        out << rec.dump() << '\n';
    }
}

std::vector<TrainingPair> parse_training_pairs(std::istream& in, std::string_view source)
{
    std::vector<TrainingPair> out;
    detail::for_each_record(in, source, [&](const ordered_json& rec, const std::string& where) {
        TrainingPair p;
        p.query_id = get_string(rec, "query_id", where);
        p.doc_id = get_string(rec, "doc_id", where);
        p.query_text = get_string(rec, "query_text", where);
        p.doc_text = get_string(rec, "doc_text", where);
        auto label = rec.find("label");
        if (label == rec.end() || !label->is_number_integer() ||
            (label->get<int>() != 0 && label->get<int>() != 1)) {
            throw DataError(where + ": label must be 0 or 1");
        }
        p.label = label->get<int>();
        try {
            p.difficulty = parse_negative_mode(get_string(rec, "difficulty", where));
        } catch (const UsageError& e) {
            throw DataError(where + ": " + e.what());
        }
        out.push_back(std::move(p));
    });
    return out;
}

void write_candidates(std::ostream& out, const std::vector<CandidateSet>& sets)
{
    for (const auto& s : sets) {
        ordered_json rec;
        rec["query_id"] = s.query_id;
        rec["doc_ids"] = s.doc_ids;
        rec["injected"] = s.injected ? ordered_json(*s.injected) : ordered_json(nullptr);
        out << rec.dump() << '\n';
    }
}

std::vector<CandidateSet> parse_candidates(std::istream& in, std::string_view source)
{
    std::vector<CandidateSet> out;
    detail::for_each_record(in, source, [&](const ordered_json& rec, const std::string& where) {
        CandidateSet s;
        s.query_id = get_string(rec, "query_id", where);
        auto ids = rec.find("doc_ids");
        if (ids == rec.end() || !ids->is_array()) {
            throw DataError(where + ": missing array field 'doc_ids'");
        }
        for (const auto& id : *ids) {
            if (!id.is_string()) {
                throw DataError(where + ": doc_ids must be strings");
            }
            s.doc_ids.push_back(id.get<std::string>());
            if (!s.first_stage_ranks.emplace(s.doc_ids.back(), s.doc_ids.size()).second) {
                throw DataError(where + ": duplicate doc_id '" + s.doc_ids.back() + "'");
            }
        }
        if (auto inj = rec.find("injected"); inj != rec.end() && inj->is_string()) {
            s.injected = inj->get<std::string>();
        }
        out.push_back(std::move(s));
    });
    return out;
}

} // namespace clir::rerank
