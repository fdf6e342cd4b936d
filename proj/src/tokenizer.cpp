#include "clir/tokenizer.hpp"

#include <memory>
#include <stdexcept>

#include <unicode/brkiter.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/uscript.h>
#include <unicode/unistr.h>

namespace clir::lexical {
namespace {

const icu::Normalizer2& nfc_instance()
{
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) {
        throw std::runtime_error(std::string("ICU NFC instance unavailable: ") + u_errorName(status));
    }
    return *norm;
}

icu::UnicodeString to_nfc(std::string_view text)
{
    auto raw = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
    UErrorCode status = U_ZERO_ERROR;
    auto out = nfc_instance().normalize(raw, status);
    if (U_FAILURE(status)) {
        throw std::runtime_error(std::string("NFC normalization failed: ") + u_errorName(status));
    }
    return out;
}

// BreakIterator is not thread-safe; keep one per thread.
icu::BreakIterator& word_breaker()
{
    thread_local std::unique_ptr<icu::BreakIterator> it = [] {
        UErrorCode status = U_ZERO_ERROR;
        std::unique_ptr<icu::BreakIterator> bi(
            icu::BreakIterator::createWordInstance(icu::Locale::getRoot(), status));
        if (U_FAILURE(status)) {
            throw std::runtime_error(std::string("ICU word break iterator unavailable: ") +
                                     u_errorName(status));
        }
        return bi;
    }();
    return *it;
}

bool is_unigram_script(UChar32 c)
{
    UErrorCode status = U_ZERO_ERROR;
    switch (uscript_getScript(c, &status)) {
    case USCRIPT_HAN:
    case USCRIPT_HIRAGANA:
    case USCRIPT_KATAKANA:
    case USCRIPT_HANGUL:
    case USCRIPT_THAI:
        return true;
    default:
        return false;
    }
}

// Calls emit(begin, end) with UTF-16 offsets of each term in `text`, in order.
// Stops early when emit returns false.
template <typename Emit>
void scan_terms(const icu::UnicodeString& text, Emit&& emit)
{
    auto& bi = word_breaker();
    bi.setText(text);
    int32_t start = bi.first();
    for (int32_t end = bi.next(); end != icu::BreakIterator::DONE; start = end, end = bi.next()) {
        if (bi.getRuleStatus() < UBRK_WORD_NONE_LIMIT) {
            continue;
        }
        int32_t run_begin = -1;
        int32_t i = start;
        while (i < end) {
            const UChar32 c = text.char32At(i);
            const int32_t next = text.moveIndex32(i, 1);
            if (is_unigram_script(c)) {
                if (run_begin >= 0) {
                    if (!emit(run_begin, i)) {
                        return;
                    }
                    run_begin = -1;
                }
                if (!emit(i, next)) {
                    return;
                }
            } else if (run_begin < 0) {
                run_begin = i;
            }
            i = next;
        }
        if (run_begin >= 0 && !emit(run_begin, end)) {
            return;
        }
    }
}

std::string fold(const icu::UnicodeString& text, int32_t begin, int32_t end)
{
    icu::UnicodeString term(text, begin, end - begin);
    term.foldCase(U_FOLD_CASE_DEFAULT);
    UErrorCode status = U_ZERO_ERROR;
    if (!nfc_instance().isNormalized(term, status)) {
        status = U_ZERO_ERROR;
        term = nfc_instance().normalize(term, status);
    }
    std::string out;
    term.toUTF8String(out);
    return out;
}

} // namespace

std::vector<std::string> tokenize(std::string_view text)
{
    std::vector<std::string> terms;
    if (text.empty()) {
        return terms;
    }
    const auto normalized = to_nfc(text);
    scan_terms(normalized, [&](int32_t b, int32_t e) {
        terms.push_back(fold(normalized, b, e));
        return true;
    });
    return terms;
}

std::string nfc_normalize(std::string_view text)
{
    std::string out;
    to_nfc(text).toUTF8String(out);
    return out;
}

std::string truncate_to_terms(std::string_view text, std::size_t budget)
{
    const auto normalized = to_nfc(text);
    std::size_t seen = 0;
    int32_t cut = -1;
    bool over = false;
    scan_terms(normalized, [&](int32_t, int32_t e) {
        if (seen == budget) {
            over = true;
            return false;
        }
        ++seen;
        cut = e;
        return true;
    });
    std::string out;
    if (!over) {
        normalized.toUTF8String(out);
    } else if (cut > 0) {
        normalized.tempSubString(0, cut).toUTF8String(out);
    }
    return out;
}

std::size_t count_terms(std::string_view text)
{
    if (text.empty()) {
        return 0;
    }
    std::size_t n = 0;
    scan_terms(to_nfc(text), [&](int32_t, int32_t) {
        ++n;
        return true;
    });
    return n;
}

} // namespace clir::lexical
