#include "clir/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <set>

#include <fmt/format.h>

#include "json.hpp"

#include "clir/error.hpp"
#include "line_reader.hpp"

namespace clir::analysis {

using nlohmann::ordered_json;

namespace {

const Document& resolve(const Corpus& corpus, const std::string& doc_id)
{
    const auto* doc = corpus.find(doc_id);
    if (doc == nullptr) {
        throw DataError("retrieved doc '" + doc_id + "' is not in the corpus");
    }
    return *doc;
}

const Query& resolve(const QuerySet& queries, const std::string& query_id)
{
    const auto* q = queries.find(query_id);
    if (q == nullptr) {
        throw DataError("run query '" + query_id + "' is not in the query set");
    }
    return *q;
}

} // namespace

SameLanguageRate same_language_rate(const RunList& run, const QuerySet& queries,
                                    const Corpus& corpus, std::size_t depth)
{
    if (depth < 1) {
        throw UsageError("same_language_rate: depth must be >= 1");
    }
    SameLanguageRate out;
    out.depth = depth;
    std::map<LangCode, std::pair<std::size_t, std::size_t>> counts;
    std::size_t hits = 0;
    for (const auto& r : run.results()) {
        const auto& q = resolve(queries, r.query_id);
        bool same = false;
        for (std::size_t i = 0; i < std::min(depth, r.docs.size()); ++i) {
            same = same || resolve(corpus, r.docs[i].doc_id).lang == q.lang;
        }
        auto& [num, den] = counts[q.lang];
        num += same ? 1 : 0;
        ++den;
        hits += same ? 1 : 0;
        ++out.queries;
    }
    if (out.queries > 0) {
        out.overall = static_cast<double>(hits) / static_cast<double>(out.queries);
    }
    for (const auto& [lang, c] : counts) {
        out.per_query_lang[lang] = static_cast<double>(c.first) / static_cast<double>(c.second);
    }
    return out;
}

LanguageDistribution retrieved_language_distribution(const RunList& run, const QuerySet& queries,
                                                     const Corpus& corpus, const Judgments& qrels,
                                                     std::size_t depth, int min_grade)
{
    if (depth < 1) {
        throw UsageError("retrieved_language_distribution: depth must be >= 1");
    }
    LanguageDistribution out;
    out.depth = depth;
    const auto corpus_counts = corpus.language_counts();
    for (const auto& [lang, n] : corpus_counts) {
        out.share[lang] = 0.0;
        out.corpus_share[lang] = static_cast<double>(n) / static_cast<double>(corpus.size());
    }
    if (!corpus_counts.empty()) {
        out.uniform_share = 1.0 / static_cast<double>(corpus_counts.size());
    }

    std::map<LangCode, std::size_t> counts;
    for (const auto& r : run.results()) {
        const auto& q = resolve(queries, r.query_id);
        const auto gold = qrels.gold(r.query_id, min_grade);
        if (!gold) {
            continue;
        }
        if (resolve(corpus, *gold).lang == q.lang) {
            continue;
        }
        ++out.queries;
        for (std::size_t i = 0; i < std::min(depth, r.docs.size()); ++i) {
            ++counts[resolve(corpus, r.docs[i].doc_id).lang];
            ++out.retrieved;
        }
    }
    if (out.queries == 0) {
        throw DataError("no queries with a gold document outside the query language");
    }
    if (out.retrieved == 0) {
        throw DataError("filtered queries retrieved no documents");
    }
    for (const auto& [lang, n] : counts) {
        out.share[lang] = static_cast<double>(n) / static_cast<double>(out.retrieved);
    }
    return out;
}

void write_bias_records(std::ostream& out, const SameLanguageRate& rate,
                        const LanguageDistribution& dist, const std::vector<std::string>& header)
{
    for (const auto& h : header) {
        out << "# " << h << '\n';
    }
    ordered_json same;
    same["type"] = "same_language_rate";
    same["depth"] = rate.depth;
    same["queries"] = rate.queries;
    same["overall"] = rate.overall;
    same["per_query_lang"] = rate.per_query_lang;
    out << same.dump() << '\n';

    ordered_json share;
    share["type"] = "retrieved_language_distribution";
    share["depth"] = dist.depth;
    share["queries"] = dist.queries;
    share["retrieved"] = dist.retrieved;
    share["uniform_share"] = dist.uniform_share;
    share["share"] = dist.share;
    share["corpus_share"] = dist.corpus_share;
    out << share.dump() << '\n';
}

FeatureSet parse_feature_set(std::string_view name)
{
    for (auto set : kAllFeatureSets) {
        if (to_string(set) == name) {
            return set;
        }
    }
    throw UsageError("unknown feature set '" + std::string(name) + "'");
}

std::string_view to_string(FeatureSet set)
{
    switch (set) {
    case FeatureSet::geographic:
        return "geographic";
    case FeatureSet::syntax:
        return "syntax";
    case FeatureSet::phonology:
        return "phonology";
    case FeatureSet::inventory:
        return "inventory";
    case FeatureSet::genealogical:
        return "genealogical";
    }
    return "?";
}

void TypologyTable::add(TypologicalVector v)
{
    for (const auto& x : v.values) {
        if (x && !std::isfinite(*x)) {
            throw DataError("typological vector for '" + v.lang + "' has a non-finite value");
        }
    }
    auto [len, fresh] = lengths_.emplace(v.feature_set, v.values.size());
    if (!fresh && len->second != v.values.size()) {
        throw DataError("typological vector for '" + v.lang + "' (" +
                        std::string(to_string(v.feature_set)) + ") has length " +
                        std::to_string(v.values.size()) + ", expected " +
                        std::to_string(len->second));
    }
    auto key = std::make_pair(v.lang, v.feature_set);
    if (!vectors_.emplace(key, std::move(v)).second) {
        throw DataError("duplicate typological vector for '" + key.first + "' (" +
                        std::string(to_string(key.second)) + ")");
    }
}

const TypologicalVector* TypologyTable::find(std::string_view lang, FeatureSet set) const
{
    auto it = vectors_.find({std::string(lang), set});
    return it == vectors_.end() ? nullptr : &it->second;
}

TypologyTable parse_typology(std::istream& in, std::string_view source)
{
    TypologyTable table;
    detail::for_each_record(in, source, [&](const ordered_json& rec, const std::string& where) {
        TypologicalVector v;
        try {
            v.lang = rec.at("lang").get<std::string>();
            v.feature_set = parse_feature_set(rec.at("feature_set").get<std::string>());
        } catch (const nlohmann::json::exception& e) {
            throw DataError(where + ": " + e.what());
        } catch (const UsageError& e) {
            throw DataError(where + ": " + e.what());
        }
        auto values = rec.find("values");
        if (values == rec.end() || !values->is_array()) {
            throw DataError(where + ": missing array field 'values'");
        }
        for (const auto& x : *values) {
            if (x.is_null() || (x.is_string() && x.get<std::string>().empty())) {
                v.values.emplace_back(std::nullopt);
            } else if (x.is_number()) {
                v.values.emplace_back(x.get<double>());
            } else {
                throw DataError(where + ": values must be numbers, null or \"\"");
            }
        }
        try {
            table.add(std::move(v));
        } catch (const DataError& e) {
            throw DataError(where + ": " + e.what());
        }
    });
    return table;
}

TypologyTable read_typology(const std::filesystem::path& path)
{
    auto in = detail::open_input(path);
    return parse_typology(in, path.string());
}

std::optional<double> typological_similarity(const TypologicalVector& a,
                                             const TypologicalVector& b)
{
    if (a.feature_set != b.feature_set) {
        throw UsageError("typological_similarity: feature sets differ (" +
                         std::string(to_string(a.feature_set)) + " vs " +
                         std::string(to_string(b.feature_set)) + ")");
    }
    if (a.values.size() != b.values.size()) {
        throw DataError("typological_similarity: vector lengths differ");
    }
    double ab = 0.0;
    double aa = 0.0;
    double bb = 0.0;
    std::size_t support = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        if (!a.values[i] || !b.values[i]) {
            continue;
        }
        const double x = *a.values[i];
        const double y = *b.values[i];
        ab += x * y;
        aa += x * x;
        bb += y * y;
        ++support;
    }
    if (support == 0 || aa == 0.0 || bb == 0.0) {
        return std::nullopt;
    }
    // sqrt(aa) * sqrt(bb) keeps the product symmetric in a and b.
    return ab / (std::sqrt(aa) * std::sqrt(bb));
}

namespace {

std::vector<double> average_ranks(std::span<const double> v)
{
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) {
            ++j;
        }
        // positions i..j (0-based) share rank mean(i+1 .. j+1)
        const double rank = (static_cast<double>(i + j) / 2.0) + 1.0;
        for (std::size_t t = i; t <= j; ++t) {
            ranks[order[t]] = rank;
        }
        i = j + 1;
    }
    return ranks;
}

} // namespace

double spearman(std::span<const double> xs, std::span<const double> ys)
{
    if (xs.size() != ys.size()) {
        throw UsageError("spearman: inputs differ in length");
    }
    if (xs.size() < 3) {
        throw UsageError("spearman: need at least 3 observations");
    }
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) {
            throw DataError("spearman: non-finite input");
        }
    }
    const auto rx = average_ranks(xs);
    const auto ry = average_ranks(ys);
    const double n = static_cast<double>(rx.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        const double dx = rx[i] - mx;
        const double dy = ry[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw DataError("spearman: constant input has no rank variance");
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationRow correlate_similarity_with_performance(const std::map<LanguagePair, double>& recall,
                                                     const TypologyTable& typology,
                                                     FeatureSet feature_set,
                                                     const CorrelationOptions& options)
{
    CorrelationRow row;
    row.feature_set = feature_set;
    std::vector<double> sims;
    std::vector<double> perf;
    for (const auto& [pair, value] : recall) {
        if (options.exclude_same_language && pair.same_language()) {
            ++row.excluded_same_language;
            continue;
        }
        const auto* a = typology.find(pair.query_lang, feature_set);
        const auto* b = typology.find(pair.doc_lang, feature_set);
        if (a == nullptr || b == nullptr) {
            ++row.excluded_missing_vector;
            continue;
        }
        auto sim = typological_similarity(*a, *b);
        if (!sim) {
            ++row.excluded_undefined;
            continue;
        }
        sims.push_back(*sim);
        perf.push_back(value);
    }
    row.pairs_used = sims.size();
    if (sims.size() < 3) {
        throw DataError(std::string(to_string(feature_set)) + ": only " +
                        std::to_string(sims.size()) + " usable language pairs, need 3");
    }
    row.rho = spearman(sims, perf);
    return row;
}

void write_correlation_records(std::ostream& out, const std::vector<CorrelationRow>& rows,
                               const std::vector<std::string>& header)
{
    for (const auto& h : header) {
        out << "# " << h << '\n';
    }
    for (const auto& r : rows) {
        ordered_json rec;
        rec["model"] = r.model;
        rec["dataset"] = r.dataset;
        rec["feature_set"] = std::string(to_string(r.feature_set));
        rec["rho"] = r.rho ? ordered_json(*r.rho) : ordered_json(nullptr);
        rec["pairs_used"] = r.pairs_used;
        rec["excluded_undefined"] = r.excluded_undefined;
        rec["excluded_same_language"] = r.excluded_same_language;
        rec["excluded_missing_vector"] = r.excluded_missing_vector;
        if (!r.error.empty()) {
            rec["error"] = r.error;
        }
        out << rec.dump() << '\n';
    }
}

void write_correlation_table(std::ostream& out, const std::vector<CorrelationRow>& rows)
{
    std::map<std::pair<std::string, std::string>, std::map<FeatureSet, std::optional<double>>>
        grid;
    for (const auto& r : rows) {
        grid[{r.model, r.dataset}][r.feature_set] = r.rho;
    }
    std::string head = fmt::format("{:<16} {:<12}", "model", "dataset");
    for (auto set : kAllFeatureSets) {
        head += fmt::format(" {:>12}", to_string(set));
    }
    out << head << '\n' << std::string(head.size(), '-') << '\n';
    for (const auto& [key, cells] : grid) {
        out << fmt::format("{:<16} {:<12}", key.first, key.second);
        for (auto set : kAllFeatureSets) {
            auto it = cells.find(set);
            if (it == cells.end() || !it->second) {
                out << fmt::format(" {:>12}", "-");
            } else {
                out << fmt::format(" {:>12.3f}", *it->second);
            }
        }
        out << '\n';
    }
}

} // namespace clir::analysis
