#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clir/embedding.hpp"
#include "clir/run.hpp"
#include "clir/topk.hpp"

namespace clir::ann {

enum class NeighborSelection : std::uint8_t {
    /// Keep the closest candidates.
    simple = 0,
    /// Keep a candidate only if it is closer to the base than to every
    /// neighbor already kept.
    heuristic = 1,
};

struct HnswParams {
    std::size_t M = 16;
    std::size_t ef_construction = 200;
    /// 0 selects the adaptive rule max(50, 2k) at query time.
    std::size_t ef_search = 0;
    /// 0 selects 1 / ln(M).
    double level_multiplier = 0.0;
    NeighborSelection selection = NeighborSelection::simple;
    /// A new node links to up to 2M neighbors on layer 0 (as FAISS does)
    /// instead of M. Denser base layer, higher recall at equal ef.
    bool wide_base_links = true;

    /// Throws UsageError on M < 2 or ef_construction < 1.
    void validate() const;
    double effective_level_multiplier() const;
    std::size_t max_degree(std::size_t layer) const { return layer == 0 ? 2 * M : M; }
    /// Links made by a newly inserted node.
    std::size_t insert_degree(std::size_t layer) const
    {
        return layer == 0 && wide_base_links ? 2 * M : M;
    }
    /// ef_search when set, otherwise max(50, 2k).
    std::size_t ef_for(std::size_t k) const;

    bool operator==(const HnswParams&) const = default;
};

/// max(50, 2k).
std::size_t adaptive_ef(std::size_t k);

/// Hierarchical proximity graph over unit-norm vectors. Similarity is the
/// inner product, i.e. 1 - cosine distance. Immutable once built.
class HnswIndex {
public:
    HnswIndex() = default;

    /// Deterministic for a fixed seed. docs must be non-empty and unit-norm.
    static HnswIndex build(const dense::EmbeddingMatrix& docs, const dense::IdMap& ids,
                           const HnswParams& params, std::uint64_t seed,
                           std::string model_name = {});

    /// Up to k hits, best first, ties by row. Requires ef >= k.
    std::vector<Hit> search(std::span<const float> query, std::size_t k, std::size_t ef) const;

    /// Searches every query row; rows are processed in parallel (OpenMP).
    std::vector<std::vector<Hit>> search_all(const dense::EmbeddingMatrix& queries,
                                             std::size_t k, std::size_t ef) const;
    /// Single-threaded reference for search_all.
    std::vector<std::vector<Hit>> search_all_serial(const dense::EmbeddingMatrix& queries,
                                                    std::size_t k, std::size_t ef) const;

    std::size_t size() const { return levels_.size(); }
    std::size_t dim() const { return vectors_.dim(); }
    const HnswParams& params() const { return params_; }
    std::uint64_t seed() const { return seed_; }
    const std::string& model_name() const { return model_name_; }
    const dense::IdMap& ids() const { return ids_; }
    const dense::EmbeddingMatrix& vectors() const { return vectors_; }
    std::uint32_t entry_point() const { return entry_; }
    int max_level() const { return max_level_; }
    int level(std::uint32_t node) const { return levels_[node]; }
    /// Neighbors of `node` at `layer`; layer must be <= level(node).
    std::span<const std::uint32_t> neighbors(std::uint32_t node, int layer) const
    {
        return links_[node][static_cast<std::size_t>(layer)];
    }

    std::vector<unsigned char> serialize() const;
    static HnswIndex deserialize(std::span<const unsigned char> bytes,
                                 std::string_view source = "<hnsw index>");
    void save(const std::filesystem::path& path) const;
    static HnswIndex load(const std::filesystem::path& path);

    bool operator==(const HnswIndex&) const = default;

private:
    struct Candidate {
        float sim;
        std::uint32_t node;
    };

    std::vector<Candidate> search_layer(std::span<const float> query,
                                        const std::vector<Candidate>& entry, std::size_t ef,
                                        int layer) const;
    std::vector<std::uint32_t> select_neighbors(std::span<const float> base,
                                                std::vector<Candidate> candidates,
                                                std::size_t m) const;
    float similarity(std::span<const float> query, std::uint32_t node) const;
    void insert(std::uint32_t node, int node_level);

    HnswParams params_;
    std::uint64_t seed_ = 0;
    std::string model_name_;
    dense::IdMap ids_;
    dense::EmbeddingMatrix vectors_;
    std::vector<int> levels_;
    /// links_[node][layer] -> neighbor nodes.
    std::vector<std::vector<std::vector<std::uint32_t>>> links_;
    std::uint32_t entry_ = 0;
    int max_level_ = -1;
};

inline constexpr std::uint32_t kHnswFormatVersion = 1;

} // namespace clir::ann
