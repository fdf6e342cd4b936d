#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clir/corpus.hpp"
#include "clir/language.hpp"
#include "clir/run.hpp"

namespace clir::analysis {

// ---- document-language bias --------------------------------------------

struct SameLanguageRate {
    std::size_t depth = 1;
    /// Fraction of queries whose top-`depth` holds a doc in the query language.
    double overall = 0.0;
    std::map<LangCode, double> per_query_lang;
    std::size_t queries = 0;
};

/// Throws DataError when a retrieved doc is not in the corpus or a run query
/// is not in the query set.
SameLanguageRate same_language_rate(const RunList& run, const QuerySet& queries,
                                    const Corpus& corpus, std::size_t depth = 1);

struct LanguageDistribution {
    std::size_t depth = 1;
    /// Share of retrieved documents per document language; sums to 1.
    std::map<LangCode, double> share;
    /// Corpus proportion of each language, the no-bias reference.
    std::map<LangCode, double> corpus_share;
    /// 1 / number of corpus languages.
    double uniform_share = 0.0;
    /// Queries whose gold doc is not in the query language.
    std::size_t queries = 0;
    std::size_t retrieved = 0;
};

/// Languages of the top-`depth` documents over queries whose gold document
/// is written in another language than the query. An empty filtered set
/// raises DataError.
LanguageDistribution retrieved_language_distribution(const RunList& run, const QuerySet& queries,
                                                     const Corpus& corpus, const Judgments& qrels,
                                                     std::size_t depth = 1, int min_grade = 1);

void write_bias_records(std::ostream& out, const SameLanguageRate& rate,
                        const LanguageDistribution& dist,
                        const std::vector<std::string>& header = {});

// ---- typology and correlation ------------------------------------------

enum class FeatureSet { geographic, syntax, phonology, inventory, genealogical };

inline constexpr FeatureSet kAllFeatureSets[] = {FeatureSet::geographic, FeatureSet::syntax,
                                                 FeatureSet::phonology, FeatureSet::inventory,
                                                 FeatureSet::genealogical};

FeatureSet parse_feature_set(std::string_view name);
std::string_view to_string(FeatureSet set);

struct TypologicalVector {
    LangCode lang;
    FeatureSet feature_set = FeatureSet::syntax;
    /// nullopt marks a missing feature.
    std::vector<std::optional<double>> values;
};

/// Typological vectors keyed by (language, feature set). All vectors of a
/// feature set share one length.
class TypologyTable {
public:
    /// Throws DataError on duplicates, non-finite values or length mismatch.
    void add(TypologicalVector v);
    const TypologicalVector* find(std::string_view lang, FeatureSet set) const;
    std::size_t size() const { return vectors_.size(); }

private:
    std::map<std::pair<LangCode, FeatureSet>, TypologicalVector> vectors_;
    std::map<FeatureSet, std::size_t> lengths_;
};

/// Records {"lang", "feature_set", "values": [..]}; null or "" is missing.
TypologyTable parse_typology(std::istream& in, std::string_view source = "<typology>");
TypologyTable read_typology(const std::filesystem::path& path);

/// Cosine over dimensions present in both vectors. nullopt when that support
/// is empty or either masked vector has zero norm. Throws UsageError on
/// different feature sets.
std::optional<double> typological_similarity(const TypologicalVector& a,
                                             const TypologicalVector& b);

/// Spearman's rho: Pearson correlation of average ranks. Requires equal
/// lengths >= 3; constant input raises DataError.
double spearman(std::span<const double> xs, std::span<const double> ys);

struct CorrelationOptions {
    bool exclude_same_language = true;
};

struct CorrelationRow {
    std::string model;
    std::string dataset;
    FeatureSet feature_set = FeatureSet::syntax;
    std::optional<double> rho;
    std::size_t pairs_used = 0;
    std::size_t excluded_undefined = 0;
    std::size_t excluded_same_language = 0;
    std::size_t excluded_missing_vector = 0;
    /// Why rho is absent.
    std::string error;
};

/// Spearman correlation between per-pair similarity and per-pair recall.
/// Throws DataError with fewer than 3 usable pairs or constant input.
CorrelationRow correlate_similarity_with_performance(
    const std::map<LanguagePair, double>& recall, const TypologyTable& typology,
    FeatureSet feature_set, const CorrelationOptions& options = {});

void write_correlation_records(std::ostream& out, const std::vector<CorrelationRow>& rows,
                               const std::vector<std::string>& header = {});
/// model x dataset rows, one column per feature set.
void write_correlation_table(std::ostream& out, const std::vector<CorrelationRow>& rows);

} // namespace clir::analysis
