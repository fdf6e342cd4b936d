#pragma once

#include <compare>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace clir {

/// Lowercase ISO 639-1 code, e.g. "de".
using LangCode = std::string;

struct LanguagePair {
    LangCode query_lang;
    LangCode doc_lang;

    auto operator<=>(const LanguagePair&) const = default;

    bool same_language() const { return query_lang == doc_lang; }
    /// "en-de" style label used in reports.
    std::string label() const { return query_lang + "-" + doc_lang; }
    static LanguagePair parse(std::string_view label);
};

/// All assigned ISO 639-1 codes.
const std::set<LangCode>& iso639_1_codes();

bool is_iso639_1(std::string_view code);

struct DatasetPreset {
    std::string name;
    std::vector<LangCode> languages;
    /// Number of evaluated language pairs, used to scale latency traces.
    int pair_count;
};

/// Presets for "clirmatrix", "mmarco" and "large-scale".
const std::vector<DatasetPreset>& dataset_presets();

/// Throws UsageError for an unknown name.
const DatasetPreset& dataset_preset(std::string_view name);

} // namespace clir
