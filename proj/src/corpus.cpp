#include "clir/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "json.hpp"

#include "clir/error.hpp"
#include "clir/tokenizer.hpp"
#include "line_reader.hpp"

namespace clir {

using nlohmann::ordered_json;

bool LanguageSet::accepts(std::string_view code) const
{
    if (!is_iso639_1(code)) {
        return false;
    }
    return allowed.empty() || allowed.contains(std::string(code));
}

namespace {

bool blank(std::string_view s)
{
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string require_string(const ordered_json& rec, const char* field, const std::string& where)
{
    auto it = rec.find(field);
    if (it == rec.end() || !it->is_string()) {
        throw DataError(where + ": missing string field '" + field + "'");
    }
    return it->get<std::string>();
}

} // namespace

Corpus::Corpus(std::vector<Document> docs)
    : docs_(std::move(docs))
{
    rows_.reserve(docs_.size());
    for (std::size_t i = 0; i < docs_.size(); ++i) {
        if (blank(docs_[i].text)) {
            throw DataError("document '" + docs_[i].doc_id + "' has empty text");
        }
        if (!rows_.emplace(docs_[i].doc_id, i).second) {
            throw DataError("duplicate doc_id '" + docs_[i].doc_id + "'");
        }
    }
}

std::optional<std::size_t> Corpus::row_of(std::string_view doc_id) const
{
    auto it = rows_.find(std::string(doc_id));
    if (it == rows_.end()) {
        return std::nullopt;
    }
    return it->second;
}

const Document* Corpus::find(std::string_view doc_id) const
{
    auto row = row_of(doc_id);
    return row ? &docs_[*row] : nullptr;
}

std::map<LangCode, std::size_t> Corpus::language_counts() const
{
    std::map<LangCode, std::size_t> counts;
    for (const auto& d : docs_) {
        ++counts[d.lang];
    }
    return counts;
}

QuerySet::QuerySet(std::vector<Query> queries)
    : queries_(std::move(queries))
{
    for (std::size_t i = 0; i < queries_.size(); ++i) {
        if (blank(queries_[i].text)) {
            throw DataError("query '" + queries_[i].query_id + "' has empty text");
        }
        if (!rows_.emplace(queries_[i].query_id, i).second) {
            throw DataError("duplicate query_id '" + queries_[i].query_id + "'");
        }
    }
}

const Query* QuerySet::find(std::string_view query_id) const
{
    auto it = rows_.find(std::string(query_id));
    return it == rows_.end() ? nullptr : &queries_[it->second];
}

Judgments::Judgments(std::vector<Judgment> judgments)
{
    for (auto& j : judgments) {
        if (j.grade < 0) {
            throw DataError("negative grade for (" + j.query_id + ", " + j.doc_id + ")");
        }
        auto& docs = by_query_[j.query_id];
        if (!docs.emplace(j.doc_id, j.grade).second) {
            throw DataError("duplicate judgment for (" + j.query_id + ", " + j.doc_id + ")");
        }
        ++count_;
    }
}

int Judgments::grade(std::string_view query_id, std::string_view doc_id) const
{
    auto q = by_query_.find(query_id);
    if (q == by_query_.end()) {
        return 0;
    }
    auto d = q->second.find(std::string(doc_id));
    return d == q->second.end() ? 0 : d->second;
}

bool Judgments::has_query(std::string_view query_id) const
{
    return by_query_.find(query_id) != by_query_.end();
}

const std::map<std::string, int>& Judgments::judged(std::string_view query_id) const
{
    static const std::map<std::string, int> none;
    auto q = by_query_.find(query_id);
    return q == by_query_.end() ? none : q->second;
}

std::vector<std::string> Judgments::relevant(std::string_view query_id, int min_grade) const
{
    std::vector<std::string> out;
    for (const auto& [doc, g] : judged(query_id)) {
        if (g >= min_grade) {
            out.push_back(doc);
        }
    }
    return out;
}

std::optional<std::string> Judgments::gold(std::string_view query_id, int min_grade) const
{
    std::optional<std::string> best;
    int best_grade = 0;
    for (const auto& [doc, g] : judged(query_id)) {
        if (g >= min_grade && (!best || g > best_grade)) {
            best = doc;
            best_grade = g;
        }
    }
    return best;
}

std::vector<std::string> Judgments::query_ids() const
{
    std::vector<std::string> ids;
    ids.reserve(by_query_.size());
    for (const auto& [q, _] : by_query_) {
        ids.push_back(q);
    }
    return ids;
}

std::vector<Judgment> Judgments::all() const
{
    std::vector<Judgment> out;
    out.reserve(count_);
    for (const auto& [q, docs] : by_query_) {
        for (const auto& [d, g] : docs) {
            out.push_back({q, d, g});
        }
    }
    return out;
}

Corpus parse_corpus(std::istream& in, const LanguageSet& languages, std::string_view source)
{
    std::vector<Document> docs;
    std::unordered_map<std::string, std::size_t> seen;
    detail::for_each_record(in, source, [&](const ordered_json& rec, const std::string& where) {
        Document d;
        d.doc_id = require_string(rec, "doc_id", where);
        d.lang = require_string(rec, "lang", where);
        d.text = require_string(rec, "text", where);
        if (auto it = rec.find("translated_text"); it != rec.end() && !it->is_null()) {
            if (!it->is_string()) {
                throw DataError(where + ": field 'translated_text' must be a string");
            }
            d.translated_text = it->get<std::string>();
        }
        if (!languages.accepts(d.lang)) {
            throw DataError(where + ": unknown language code '" + d.lang + "'");
        }
        if (blank(d.text)) {
            throw DataError(where + ": empty text for doc_id '" + d.doc_id + "'");
        }
        if (!seen.emplace(d.doc_id, docs.size()).second) {
            throw DataError(where + ": duplicate doc_id '" + d.doc_id + "'");
        }
        docs.push_back(std::move(d));
    });
    return Corpus(std::move(docs));
}

Corpus read_corpus(const std::filesystem::path& path, const LanguageSet& languages)
{
    auto in = detail::open_input(path);
    return parse_corpus(in, languages, path.string());
}

void write_corpus(std::ostream& out, const Corpus& corpus)
{
    for (const auto& d : corpus.documents()) {
        ordered_json rec;
        rec["doc_id"] = d.doc_id;
        rec["lang"] = d.lang;
        rec["text"] = d.text;
        if (d.translated_text) {
            rec["translated_text"] = *d.translated_text;
        }
        out << rec.dump() << '\n';
    }
}

QuerySet parse_queries(std::istream& in, const LanguageSet& languages, std::string_view source)
{
    std::vector<Query> queries;
    std::unordered_map<std::string, std::size_t> seen;
    detail::for_each_record(in, source, [&](const ordered_json& rec, const std::string& where) {
        Query q;
        q.query_id = require_string(rec, "query_id", where);
        q.lang = require_string(rec, "lang", where);
        q.text = require_string(rec, "text", where);
        if (!languages.accepts(q.lang)) {
            throw DataError(where + ": unknown language code '" + q.lang + "'");
        }
        if (blank(q.text)) {
            throw DataError(where + ": empty text for query_id '" + q.query_id + "'");
        }
        if (!seen.emplace(q.query_id, queries.size()).second) {
            throw DataError(where + ": duplicate query_id '" + q.query_id + "'");
        }
        queries.push_back(std::move(q));
    });
    return QuerySet(std::move(queries));
}

QuerySet read_queries(const std::filesystem::path& path, const LanguageSet& languages)
{
    auto in = detail::open_input(path);
    return parse_queries(in, languages, path.string());
}

void write_queries(std::ostream& out, const QuerySet& queries)
{
    for (const auto& q : queries.queries()) {
        ordered_json rec;
        rec["query_id"] = q.query_id;
        rec["lang"] = q.lang;
        rec["text"] = q.text;
        out << rec.dump() << '\n';
    }
}

Judgments parse_qrels(std::istream& in, std::string_view source)
{
    std::vector<Judgment> judgments;
    detail::for_each_line(in, [&](const std::string& line, std::size_t lineno) {
        std::istringstream fields(line);
        std::string qid, iter, did, grade_text, extra;
        if (!(fields >> qid >> iter >> did >> grade_text) || (fields >> extra)) {
            throw DataError(std::string(source) + ":" + std::to_string(lineno) +
                            ": expected 'query_id 0 doc_id grade'");
        }
        int grade = 0;
        try {
            std::size_t used = 0;
            grade = std::stoi(grade_text, &used);
            if (used != grade_text.size()) {
                throw std::invalid_argument(grade_text);
            }
        } catch (const std::logic_error&) {
            throw DataError(std::string(source) + ":" + std::to_string(lineno) +
                            ": grade is not an integer: '" + grade_text + "'");
        }
        if (grade < 0) {
            throw DataError(std::string(source) + ":" + std::to_string(lineno) +
                            ": negative grade");
        }
        judgments.push_back({std::move(qid), std::move(did), grade});
    });
    try {
        return Judgments(std::move(judgments));
    } catch (const DataError& e) {
        throw DataError(std::string(source) + ": " + e.what());
    }
}

Judgments read_qrels(const std::filesystem::path& path)
{
    auto in = detail::open_input(path);
    return parse_qrels(in, path.string());
}

void write_qrels(std::ostream& out, const Judgments& qrels)
{
    for (const auto& j : qrels.all()) {
        out << j.query_id << " 0 " << j.doc_id << ' ' << j.grade << '\n';
    }
}

TextField parse_text_field(std::string_view name)
{
    if (name == "original") {
        return TextField::original;
    }
    if (name == "translated") {
        return TextField::translated;
    }
    throw UsageError("field must be 'original' or 'translated', got '" + std::string(name) + "'");
}

std::string_view to_string(TextField field)
{
    return field == TextField::original ? "original" : "translated";
}

const std::string& field_text(const Document& doc, TextField field)
{
    if (field == TextField::original) {
        return doc.text;
    }
    if (!doc.translated_text) {
        throw DataError("document '" + doc.doc_id + "' has no translated_text");
    }
    return *doc.translated_text;
}

std::string canonical_text(std::string_view text)
{
    const auto normalized = icu::UnicodeString::fromUTF8(lexical::nfc_normalize(text));
    icu::UnicodeString out;
    bool pending_space = false;
    for (int32_t i = 0; i < normalized.length();) {
        const UChar32 c = normalized.char32At(i);
        i = normalized.moveIndex32(i, 1);
        if (u_isUWhiteSpace(c)) {
            pending_space = !out.isEmpty();
            continue;
        }
        if (pending_space) {
            out.append(static_cast<UChar>(0x20));
            pending_space = false;
        }
        out.append(c);
    }
    std::string utf8;
    out.toUTF8String(utf8);
    return utf8;
}

Corpus dedupe_and_rebalance(const Corpus& corpus, std::span<const LangCode> languages,
                            std::uint64_t seed, TextField key_field)
{
    if (corpus.empty()) {
        throw UsageError("dedupe_and_rebalance: corpus is empty");
    }
    if (languages.empty()) {
        throw UsageError("dedupe_and_rebalance: no target languages");
    }

    // Groups of rows sharing a canonical key, in first-seen order.
    std::vector<std::vector<std::size_t>> groups;
    std::unordered_map<std::string, std::size_t> group_of;
    for (std::size_t row = 0; row < corpus.size(); ++row) {
        auto key = canonical_text(field_text(corpus[row], key_field));
        auto [it, inserted] = group_of.emplace(std::move(key), groups.size());
        if (inserted) {
            groups.emplace_back();
        }
        groups[it->second].push_back(row);
    }
    if (groups.size() < languages.size()) {
        throw DataError("dedupe_and_rebalance: " + std::to_string(groups.size()) +
                        " unique documents cannot cover " + std::to_string(languages.size()) +
                        " languages");
    }

    std::vector<std::size_t> order(groups.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<LangCode> assigned(groups.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        assigned[order[i]] = languages[i % languages.size()];
    }

    std::vector<Document> out;
    out.reserve(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& members = groups[g];
        auto match = std::find_if(members.begin(), members.end(),
                                  [&](std::size_t row) { return corpus[row].lang == assigned[g]; });
        Document doc = corpus[match != members.end() ? *match : members.front()];
        doc.lang = assigned[g];
        out.push_back(std::move(doc));
    }
    return Corpus(std::move(out));
}

QuerySet sample_queries(const QuerySet& pool, const LanguagePair& pair, std::size_t n,
                        std::uint64_t seed)
{
    if (n > pool.size()) {
        throw UsageError("sample_queries: requested " + std::to_string(n) + " of " +
                         std::to_string(pool.size()) + " queries for " + pair.label());
    }
    for (const auto& q : pool.queries()) {
        if (q.lang != pair.query_lang) {
            throw DataError("sample_queries: query '" + q.query_id + "' is not in language '" +
                            pair.query_lang + "'");
        }
    }
    std::vector<Query> drawn(pool.queries().begin(), pool.queries().end());
    std::mt19937_64 rng(seed);
    std::shuffle(drawn.begin(), drawn.end(), rng);
    drawn.resize(n);
    return QuerySet(std::move(drawn));
}

std::map<std::string, LanguagePair> query_pairs(const QuerySet& queries, const Judgments& qrels,
                                                const Corpus& corpus, int min_grade)
{
    std::map<std::string, LanguagePair> pairs;
    for (const auto& q : queries.queries()) {
        auto gold = qrels.gold(q.query_id, min_grade);
        if (!gold) {
            continue;
        }
        if (const auto* doc = corpus.find(*gold)) {
            pairs.emplace(q.query_id, LanguagePair{q.lang, doc->lang});
        }
    }
    return pairs;
}

std::map<LanguagePair, QuerySet> pair_pools(const QuerySet& queries, const Judgments& qrels,
                                            const Corpus& corpus, int min_grade)
{
    const auto pairs = query_pairs(queries, qrels, corpus, min_grade);
    std::map<LanguagePair, std::vector<Query>> grouped;
    for (const auto& q : queries.queries()) {
        if (auto it = pairs.find(q.query_id); it != pairs.end()) {
            grouped[it->second].push_back(q);
        }
    }
    std::map<LanguagePair, QuerySet> out;
    for (auto& [pair, qs] : grouped) {
        out.emplace(pair, QuerySet(std::move(qs)));
    }
    return out;
}

std::string truncate_text(std::string_view text, std::size_t budget)
{
    if (budget < 1) {
        throw UsageError("truncation budget must be >= 1");
    }
    return lexical::truncate_to_terms(text, budget);
}

Corpus truncate_corpus(const Corpus& corpus, std::size_t budget)
{
    std::vector<Document> docs(corpus.documents().begin(), corpus.documents().end());
    for (auto& d : docs) {
        d.text = truncate_text(d.text, budget);
        if (d.translated_text) {
            d.translated_text = truncate_text(*d.translated_text, budget);
        }
    }
    return Corpus(std::move(docs));
}

CorpusManifest make_manifest(std::string dataset_name, const Corpus& corpus, int retrieval_depth,
                             int truncation_budget, std::uint64_t seed)
{
    if (retrieval_depth < 1) {
        throw UsageError("retrieval depth must be >= 1");
    }
    return {std::move(dataset_name), retrieval_depth, corpus.language_counts(), truncation_budget,
            seed};
}

void write_manifest(std::ostream& out, const CorpusManifest& m)
{
    ordered_json j;
    j["dataset_name"] = m.dataset_name;
    j["retrieval_depth"] = m.retrieval_depth;
    j["truncation_budget"] = m.truncation_budget;
    j["seed"] = m.seed;
    j["per_language_doc_counts"] = m.per_language_doc_counts;
    out << j.dump(2) << '\n';
}

CorpusManifest parse_manifest(std::istream& in)
{
    try {
        auto j = ordered_json::parse(in);
        CorpusManifest m;
        m.dataset_name = j.at("dataset_name").get<std::string>();
        m.retrieval_depth = j.at("retrieval_depth").get<int>();
        m.truncation_budget = j.at("truncation_budget").get<int>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.per_language_doc_counts =
            j.at("per_language_doc_counts").get<std::map<LangCode, std::size_t>>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed manifest: ") + e.what());
    }
}

} // namespace clir
