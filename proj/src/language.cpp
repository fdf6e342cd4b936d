#include "clir/language.hpp"

#include "clir/error.hpp"

namespace clir {

LanguagePair LanguagePair::parse(std::string_view label)
{
    if (label.size() != 5 || label[2] != '-' || !is_iso639_1(label.substr(0, 2)) ||
        !is_iso639_1(label.substr(3))) {
        throw UsageError("language pair must look like 'en-de', got '" + std::string(label) + "'");
    }
    return {std::string(label.substr(0, 2)), std::string(label.substr(3))};
}

const std::set<LangCode>& iso639_1_codes()
{
    static const std::set<LangCode> codes = {
        "aa", "ab", "ae", "af", "ak", "am", "an", "ar", "as", "av", "ay", "az", "ba", "be", "bg",
        "bh", "bi", "bm", "bn", "bo", "br", "bs", "ca", "ce", "ch", "co", "cr", "cs", "cu", "cv",
        "cy", "da", "de", "dv", "dz", "ee", "el", "en", "eo", "es", "et", "eu", "fa", "ff", "fi",
        "fj", "fo", "fr", "fy", "ga", "gd", "gl", "gn", "gu", "gv", "ha", "he", "hi", "ho", "hr",
        "ht", "hu", "hy", "hz", "ia", "id", "ie", "ig", "ii", "ik", "io", "is", "it", "iu", "ja",
        "jv", "ka", "kg", "ki", "kj", "kk", "kl", "km", "kn", "ko", "kr", "ks", "ku", "kv", "kw",
        "ky", "la", "lb", "lg", "li", "ln", "lo", "lt", "lu", "lv", "mg", "mh", "mi", "mk", "ml",
        "mn", "mr", "ms", "mt", "my", "na", "nb", "nd", "ne", "ng", "nl", "nn", "no", "nr", "nv",
        "ny", "oc", "oj", "om", "or", "os", "pa", "pi", "pl", "ps", "pt", "qu", "rm", "rn", "ro",
        "ru", "rw", "sa", "sc", "sd", "se", "sg", "si", "sk", "sl", "sm", "sn", "so", "sq", "sr",
        "ss", "st", "su", "sv", "sw", "ta", "te", "tg", "th", "ti", "tk", "tl", "tn", "to", "tr",
        "ts", "tt", "tw", "ty", "ug", "uk", "ur", "uz", "ve", "vi", "vo", "wa", "wo", "xh", "yi",
        "yo", "za", "zh", "zu",
    };
    return codes;
}

bool is_iso639_1(std::string_view code)
{
    return iso639_1_codes().contains(std::string(code));
}

const std::vector<DatasetPreset>& dataset_presets()
{
    static const std::vector<DatasetPreset> presets = {
        {"clirmatrix", {"ar", "de", "en", "es", "fr", "ja", "ru", "zh"}, 56},
        {"mmarco",
         {"ar", "de", "en", "es", "fr", "hi", "id", "it", "ja", "nl", "pt", "ru", "vi", "zh"},
         196},
        {"large-scale",
         {"ar", "ca", "cs", "de", "en", "es", "fi", "fr", "it", "ja", "ko", "nl", "nn",
          "no", "pl", "pt", "ro", "ru", "sv", "sw", "tl", "tr", "uk", "vi", "zh"},
         26},
    };
    return presets;
}

const DatasetPreset& dataset_preset(std::string_view name)
{
    for (const auto& p : dataset_presets()) {
        if (p.name == name) {
            return p;
        }
    }
    throw UsageError("unknown dataset preset '" + std::string(name) + "'");
}

} // namespace clir
