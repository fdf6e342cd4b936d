#include "clir/hnsw.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>

#include "binary_io.hpp"
#include "checksum.hpp"
#include "clir/error.hpp"

namespace clir::ann {

void HnswParams::validate() const
{
    if (M < 2) {
        throw UsageError("HNSW M must be >= 2");
    }
    if (ef_construction < 1) {
        throw UsageError("HNSW ef_construction must be >= 1");
    }
    if (level_multiplier < 0.0 || !std::isfinite(level_multiplier)) {
        throw UsageError("HNSW level multiplier must be finite and >= 0");
    }
}

double HnswParams::effective_level_multiplier() const
{
    return level_multiplier > 0.0 ? level_multiplier : 1.0 / std::log(static_cast<double>(M));
}

std::size_t adaptive_ef(std::size_t k)
{
    return std::max<std::size_t>(50, 2 * k);
}

std::size_t HnswParams::ef_for(std::size_t k) const
{
    return ef_search > 0 ? std::max(ef_search, k) : adaptive_ef(k);
}

namespace {

struct Better {
    template <typename C>
    bool operator()(const C& a, const C& b) const
    {
        return a.sim > b.sim || (a.sim == b.sim && a.node < b.node);
    }
};

// Per-thread visited marks, reset lazily through an epoch counter.
class VisitedSet {
public:
    void reset(std::size_t n)
    {
        if (marks_.size() < n) {
            marks_.assign(n, 0);
            epoch_ = 0;
        }
        if (++epoch_ == 0) {
            std::fill(marks_.begin(), marks_.end(), 0);
            epoch_ = 1;
        }
    }
    /// True when the node was not yet visited.
    bool visit(std::uint32_t node)
    {
        if (marks_[node] == epoch_) {
            return false;
        }
        marks_[node] = epoch_;
        return true;
    }

private:
    std::vector<std::uint32_t> marks_;
    std::uint32_t epoch_ = 0;
};

VisitedSet& visited_for_thread()
{
    thread_local VisitedSet visited;
    return visited;
}

// Uniform draw in (0, 1] from the top 53 bits of a 64-bit generator.
double unit_open_closed(std::mt19937_64& rng)
{
    return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
}

} // namespace

float HnswIndex::similarity(std::span<const float> query, std::uint32_t node) const
{
    return dense::dot(query, vectors_.row(node));
}

std::vector<HnswIndex::Candidate> HnswIndex::search_layer(std::span<const float> query,
                                                          const std::vector<Candidate>& entry,
                                                          std::size_t ef, int layer) const
{
    // `frontier` pops the best candidate; `found` keeps the worst result on top.
    const auto worse = [](const Candidate& a, const Candidate& b) { return Better{}(b, a); };
    std::priority_queue<Candidate, std::vector<Candidate>, decltype(worse)> frontier(worse);
    std::priority_queue<Candidate, std::vector<Candidate>, Better> found;

    auto& visited = visited_for_thread();
    visited.reset(size());
    for (const auto& e : entry) {
        if (visited.visit(e.node)) {
            frontier.push(e);
            found.push(e);
        }
    }
    while (found.size() > ef) {
        found.pop();
    }

    while (!frontier.empty()) {
        const Candidate current = frontier.top();
        if (found.size() >= ef && Better{}(found.top(), current)) {
            break;
        }
        frontier.pop();
        for (std::uint32_t next : links_[current.node][static_cast<std::size_t>(layer)]) {
            if (!visited.visit(next)) {
                continue;
            }
            const Candidate c{similarity(query, next), next};
            if (found.size() < ef || Better{}(c, found.top())) {
                frontier.push(c);
                found.push(c);
                if (found.size() > ef) {
                    found.pop();
                }
            }
        }
    }

    std::vector<Candidate> out;
    out.reserve(found.size());
    while (!found.empty()) {
        out.push_back(found.top());
        found.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
}

std::vector<std::uint32_t> HnswIndex::select_neighbors(std::span<const float> base,
                                                       std::vector<Candidate> candidates,
                                                       std::size_t m) const
{
    (void)base;
    std::sort(candidates.begin(), candidates.end(), Better{});
    std::vector<std::uint32_t> kept;
    kept.reserve(m);
    if (params_.selection == NeighborSelection::simple) {
        for (std::size_t i = 0; i < candidates.size() && kept.size() < m; ++i) {
            kept.push_back(candidates[i].node);
        }
        return kept;
    }
    for (const auto& c : candidates) {
        if (kept.size() >= m) {
            break;
        }
        const auto cv = vectors_.row(c.node);
        const bool diverse = std::all_of(kept.begin(), kept.end(), [&](std::uint32_t r) {
            return dense::dot(cv, vectors_.row(r)) < c.sim;
        });
        if (diverse) {
            kept.push_back(c.node);
        }
    }
    return kept;
}

void HnswIndex::insert(std::uint32_t node, int node_level)
{
    links_[node].assign(static_cast<std::size_t>(node_level) + 1, {});
    if (max_level_ < 0) {
        entry_ = node;
        max_level_ = node_level;
        return;
    }
    const auto query = vectors_.row(node);
    std::vector<Candidate> eps{{similarity(query, entry_), entry_}};
    for (int layer = max_level_; layer > node_level; --layer) {
        eps = search_layer(query, eps, 1, layer);
    }
    for (int layer = std::min(node_level, max_level_); layer >= 0; --layer) {
        auto found = search_layer(query, eps, params_.ef_construction, layer);
        const auto lz = static_cast<std::size_t>(layer);
        auto chosen = select_neighbors(query, found, params_.insert_degree(lz));
        for (std::uint32_t nb : chosen) {
            auto& back = links_[nb][lz];
            back.push_back(node);
            if (back.size() > params_.max_degree(lz)) {
                const auto nv = vectors_.row(nb);
                std::vector<Candidate> pool;
                pool.reserve(back.size());
                for (std::uint32_t x : back) {
                    pool.push_back({dense::dot(nv, vectors_.row(x)), x});
                }
                back = select_neighbors(nv, std::move(pool), params_.max_degree(lz));
            }
        }
        links_[node][lz] = std::move(chosen);
        eps = std::move(found);
    }
    if (node_level > max_level_) {
        entry_ = node;
        max_level_ = node_level;
    }
}

HnswIndex HnswIndex::build(const dense::EmbeddingMatrix& docs, const dense::IdMap& ids,
                           const HnswParams& params, std::uint64_t seed, std::string model_name)
{
    params.validate();
    if (docs.rows() == 0) {
        throw UsageError("cannot build an HNSW index over zero vectors");
    }
    if (ids.size() != docs.rows()) {
        throw DataError("HNSW build: id count does not match vector count");
    }
    HnswIndex index;
    index.params_ = params;
    index.seed_ = seed;
    index.model_name_ = std::move(model_name);
    index.ids_ = ids;
    index.vectors_ = docs;
    index.levels_.resize(docs.rows());
    index.links_.resize(docs.rows());

    std::mt19937_64 rng(seed);
    const double ml = params.effective_level_multiplier();
    for (auto& level : index.levels_) {
        level = static_cast<int>(std::floor(-std::log(unit_open_closed(rng)) * ml));
    }
    for (std::uint32_t node = 0; node < docs.rows(); ++node) {
        index.insert(node, index.levels_[node]);
    }
    return index;
}

std::vector<Hit> HnswIndex::search(std::span<const float> query, std::size_t k,
                                   std::size_t ef) const
{
    if (k < 1) {
        throw UsageError("ann search: k must be >= 1");
    }
    if (ef < k) {
        throw UsageError("ann search: ef (" + std::to_string(ef) + ") must be >= k (" +
                         std::to_string(k) + ")");
    }
    if (query.size() != dim()) {
        throw DataError("dimension mismatch: query has dim " + std::to_string(query.size()) +
                        ", index has dim " + std::to_string(dim()));
    }
    if (size() == 0) {
        return {};
    }
    std::vector<Candidate> eps{{similarity(query, entry_), entry_}};
    for (int layer = max_level_; layer > 0; --layer) {
        eps = search_layer(query, eps, 1, layer);
    }
    const auto found = search_layer(query, eps, ef, 0);
    std::vector<Hit> hits;
    hits.reserve(std::min(k, found.size()));
    for (std::size_t i = 0; i < found.size() && hits.size() < k; ++i) {
        hits.push_back({found[i].node, found[i].sim});
    }
    return hits;
}

std::vector<std::vector<Hit>> HnswIndex::search_all(const dense::EmbeddingMatrix& queries,
                                                    std::size_t k, std::size_t ef) const
{
    if (queries.rows() > 0 && queries.dim() != dim()) {
        throw DataError("dimension mismatch: queries have dim " + std::to_string(queries.dim()) +
                        ", index has dim " + std::to_string(dim()));
    }
    std::vector<std::vector<Hit>> out(queries.rows());
    const auto n = static_cast<std::ptrdiff_t>(queries.rows());
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t q = 0; q < n; ++q) {
        out[q] = search(queries.row(q), k, ef);
    }
    return out;
}

std::vector<std::vector<Hit>> HnswIndex::search_all_serial(const dense::EmbeddingMatrix& queries,
                                                           std::size_t k, std::size_t ef) const
{
    std::vector<std::vector<Hit>> out;
    out.reserve(queries.rows());
    for (std::size_t q = 0; q < queries.rows(); ++q) {
        out.push_back(search(queries.row(q), k, ef));
    }
    return out;
}

namespace {
constexpr char kMagic[4] = {'C', 'L', 'R', 'H'};
}

std::vector<unsigned char> HnswIndex::serialize() const
{
    detail::ByteWriter w;
    w.put_bytes({kMagic, 4});
    w.put(kHnswFormatVersion);

    // params block
    w.put(static_cast<std::uint32_t>(params_.M));
    w.put(static_cast<std::uint32_t>(params_.ef_construction));
    w.put(static_cast<std::uint32_t>(params_.ef_search));
    w.put(params_.level_multiplier);
    w.put(static_cast<std::uint8_t>(params_.selection));
    w.put(static_cast<std::uint8_t>(params_.wide_base_links ? 1 : 0));
    w.put(seed_);
    w.put(static_cast<std::uint32_t>(dim()));
    w.put(static_cast<std::uint64_t>(size()));
    w.put_string(model_name_);
    w.put(entry_);
    w.put(static_cast<std::int32_t>(max_level_));

    // id table
    for (const auto& id : ids_.ids()) {
        w.put_string(id);
    }

    // adjacency payload
    for (std::size_t node = 0; node < size(); ++node) {
        w.put(static_cast<std::uint32_t>(levels_[node]));
        for (const auto& layer : links_[node]) {
            w.put(static_cast<std::uint32_t>(layer.size()));
            w.put_span(std::span<const std::uint32_t>(layer));
        }
    }

    // vectors
    w.put_span(vectors_.data());
    w.put(detail::crc32_of(w.bytes()));
    return w.bytes();
}

HnswIndex HnswIndex::deserialize(std::span<const unsigned char> bytes, std::string_view source)
{
    const std::string what(source);
    if (bytes.size() < 12 || std::string_view(reinterpret_cast<const char*>(bytes.data()), 4) !=
                                 std::string_view(kMagic, 4)) {
        throw DataError(what + ": not an HNSW index file (bad magic)");
    }
    detail::ByteReader head(bytes, what);
    head.seek(4);
    const auto version = head.get<std::uint32_t>();
    if (version != kHnswFormatVersion) {
        throw DataError(what + ": unsupported HNSW index version " + std::to_string(version));
    }
    const auto body = bytes.first(bytes.size() - 4);
    detail::ByteReader tail(bytes.last(4), what);
    if (tail.get<std::uint32_t>() != detail::crc32_of(body)) {
        throw DataError(what + ": checksum mismatch (corrupted file)");
    }

    detail::ByteReader r(body, what);
    r.seek(8);
    HnswIndex index;
    index.params_.M = r.get<std::uint32_t>();
    index.params_.ef_construction = r.get<std::uint32_t>();
    index.params_.ef_search = r.get<std::uint32_t>();
    index.params_.level_multiplier = r.get<double>();
    const auto selection = r.get<std::uint8_t>();
    if (selection > 1) {
        throw DataError(what + ": unknown neighbor selection tag");
    }
    index.params_.selection = static_cast<NeighborSelection>(selection);
    const auto wide = r.get<std::uint8_t>();
    if (wide > 1) {
        throw DataError(what + ": bad base-layer link flag");
    }
    index.params_.wide_base_links = wide == 1;
    index.seed_ = r.get<std::uint64_t>();
    const auto dim = r.get<std::uint32_t>();
    const auto count = r.get<std::uint64_t>();
    index.model_name_ = r.get_string();
    index.entry_ = r.get<std::uint32_t>();
    index.max_level_ = r.get<std::int32_t>();
    try {
        index.params_.validate();
    } catch (const UsageError& e) {
        throw DataError(what + ": " + e.what());
    }
    if (count > r.remaining() || (count > 0 && index.entry_ >= count)) {
        throw DataError(what + ": truncated or corrupted file");
    }

    std::vector<std::string> ids;
    ids.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        ids.push_back(r.get_string());
    }
    index.ids_ = dense::IdMap(std::move(ids));

    index.levels_.resize(count);
    index.links_.resize(count);
    for (std::uint64_t node = 0; node < count; ++node) {
        const auto level = r.get<std::uint32_t>();
        if (static_cast<std::int64_t>(level) > index.max_level_) {
            throw DataError(what + ": node level exceeds index maximum");
        }
        index.levels_[node] = static_cast<int>(level);
        index.links_[node].resize(level + 1);
        for (std::uint32_t layer = 0; layer <= level; ++layer) {
            const auto degree = r.get<std::uint32_t>();
            if (degree > index.params_.max_degree(layer)) {
                throw DataError(what + ": degree bound violated");
            }
            auto& list = index.links_[node][layer];
            list.resize(degree);
            r.get_span(std::span<std::uint32_t>(list));
            for (auto nb : list) {
                if (nb >= count) {
                    throw DataError(what + ": neighbor out of range");
                }
            }
        }
    }
    std::vector<float> data(count * dim);
    r.get_span(std::span<float>(data));
    if (r.remaining() != 0) {
        throw DataError(what + ": trailing bytes after vector payload");
    }
    index.vectors_ = dense::EmbeddingMatrix(count, dim, std::move(data));
    return index;
}

void HnswIndex::save(const std::filesystem::path& path) const
{
    detail::write_file_bytes(path.string(), serialize());
}

HnswIndex HnswIndex::load(const std::filesystem::path& path)
{
    const auto bytes = detail::read_file_bytes(path.string());
    return deserialize(bytes, path.string());
}

} // namespace clir::ann
