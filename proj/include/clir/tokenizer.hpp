#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace clir::lexical {

/// Splits text into index terms.
///
/// The input is NFC-normalized and segmented on Unicode word boundaries;
/// segments without letters or digits (spaces, punctuation) are dropped.
/// Characters in the Han, Hiragana, Katakana, Hangul and Thai scripts are
/// emitted as single-character unigrams since none of those scripts
/// reliably mark word boundaries with spaces. Every term is case-folded.
std::vector<std::string> tokenize(std::string_view text);

/// NFC form of a UTF-8 string. Invalid sequences become U+FFFD.
std::string nfc_normalize(std::string_view text);

/// Longest prefix of the NFC form of `text` containing at most `budget`
/// terms. Characters after the last kept term are dropped.
std::string truncate_to_terms(std::string_view text, std::size_t budget);

/// Number of terms tokenize() would produce.
std::size_t count_terms(std::string_view text);

} // namespace clir::lexical
