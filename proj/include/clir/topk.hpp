#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace clir {

/// A scored corpus row.
struct Hit {
    std::uint32_t row = 0;
    double score = 0.0;

    bool operator==(const Hit&) const = default;
};

/// Ranking order used everywhere: score descending, row ascending on ties.
constexpr bool ranks_before(const Hit& a, const Hit& b)
{
    return a.score > b.score || (a.score == b.score && a.row < b.row);
}

/// Keeps the best `k` hits of `hits`, sorted by ranks_before.
inline void keep_top_k(std::vector<Hit>& hits, std::size_t k)
{
    if (hits.size() > k) {
        std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k), hits.end(),
                          ranks_before);
        hits.resize(k);
    } else {
        std::sort(hits.begin(), hits.end(), ranks_before);
    }
}

} // namespace clir
