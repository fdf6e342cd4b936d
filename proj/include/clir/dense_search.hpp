#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "clir/embedding.hpp"
#include "clir/run.hpp"
#include "clir/topk.hpp"

namespace clir::dense {

inline constexpr std::size_t kDefaultQueryBlock = 256;

/// Exact top-k by inner product (cosine on unit rows) for every query row.
/// Queries are processed in blocks of `block` rows; rows inside a block are
/// scored in parallel with OpenMP. Results are in query order.
std::vector<std::vector<Hit>> exact_topk(const EmbeddingMatrix& queries,
                                         const EmbeddingMatrix& docs, std::size_t k,
                                         std::size_t block = kDefaultQueryBlock);

/// Single-threaded reference: scores every document and fully sorts.
std::vector<std::vector<Hit>> exact_topk_serial(const EmbeddingMatrix& queries,
                                                const EmbeddingMatrix& docs, std::size_t k);

/// Top-k for a single query vector.
std::vector<Hit> exact_topk_one(std::span<const float> query, const EmbeddingMatrix& docs,
                                std::size_t k);

/// Attaches ids to per-query hits.
RunList to_run(const std::vector<std::vector<Hit>>& hits, const IdMap& query_ids,
               const IdMap& doc_ids, std::string tag);

/// term -> shared token. Used to place aligned words of different languages
/// on the same hashed direction.
using AlignmentLexicon = std::unordered_map<std::string, std::string>;

/// Deterministic hashed bag-of-words embedder for tests and demos.
///
/// Each engine term (after optional lexicon mapping) is hashed with the seed
/// into a pseudo-random +-1 direction; a text is the tf-weighted sum of its
/// term directions, L2-normalized. Texts without terms map to a fixed
/// seed-dependent fallback direction. Requires dim >= 8.
EmbeddingMatrix toy_embed(std::span<const std::string> texts, std::size_t dim, std::uint64_t seed,
                          const AlignmentLexicon* lexicon = nullptr);

/// Reads a two-column "term<TAB>shared_token" file.
AlignmentLexicon read_lexicon(const std::string& path);

} // namespace clir::dense
