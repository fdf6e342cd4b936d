#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace clir::dense {

/// Row-major n x d matrix of 32-bit floats.
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;
    /// Throws DataError when data.size() != rows * dim.
    EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> data);

    std::size_t rows() const { return rows_; }
    std::size_t dim() const { return dim_; }
    std::span<const float> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
    std::span<float> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }
    std::span<const float> data() const { return data_; }

    /// Copies the given rows, in order, into a new matrix.
    EmbeddingMatrix select_rows(std::span<const std::size_t> rows) const;

    bool operator==(const EmbeddingMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t dim_ = 0;
    std::vector<float> data_;
};

/// Bijective row <-> doc_id mapping.
class IdMap {
public:
    IdMap() = default;
    /// Throws DataError on duplicate ids.
    explicit IdMap(std::vector<std::string> ids);

    std::size_t size() const { return ids_.size(); }
    const std::string& operator[](std::size_t row) const { return ids_[row]; }
    std::span<const std::string> ids() const { return ids_; }
    /// Throws DataError for unknown ids.
    std::size_t row_of(std::string_view id) const;
    bool contains(std::string_view id) const;

    bool operator==(const IdMap& other) const { return ids_ == other.ids_; }

private:
    std::vector<std::string> ids_;
    std::unordered_map<std::string, std::size_t> rows_;
};

/// Rows whose norm differs from 1 by more than this are rescaled on load.
inline constexpr double kUnitNormTolerance = 1e-4;
/// Rows further than this from unit norm are rejected.
inline constexpr double kRenormalizeLimit = 1e-2;

struct LoadReport {
    std::size_t renormalized_rows = 0;
    double max_norm_deviation = 0.0;
};

struct LoadedEmbeddings {
    EmbeddingMatrix matrix;
    IdMap ids;
    LoadReport report;
};

/// Enforces the unit-norm invariant in place; see kUnitNormTolerance and
/// kRenormalizeLimit. Non-finite values raise DataError.
LoadReport enforce_unit_norm(EmbeddingMatrix& matrix, std::string_view source = "<matrix>");

/// Scales every row to unit norm; zero rows raise DataError.
void l2_normalize(EmbeddingMatrix& matrix);

// Matrix file: "CLRE", version u32, rows u64, dim u32, dtype u8 (1 = f32),
// zero padding to 32 bytes, row-major little-endian payload.
inline constexpr std::uint32_t kMatrixFormatVersion = 1;
inline constexpr std::size_t kMatrixHeaderSize = 32;

std::vector<unsigned char> serialize_matrix(const EmbeddingMatrix& matrix);
/// Structural parse only; no norm checks.
EmbeddingMatrix deserialize_matrix(std::span<const unsigned char> bytes,
                                   std::string_view source = "<matrix>");

std::vector<std::string> read_ids(const std::filesystem::path& path);
void write_ids(const std::filesystem::path& path, const IdMap& ids);

LoadedEmbeddings load_embeddings(const std::filesystem::path& matrix_path,
                                 const std::filesystem::path& ids_path);
void save_embeddings(const EmbeddingMatrix& matrix, const IdMap& ids,
                     const std::filesystem::path& matrix_path,
                     const std::filesystem::path& ids_path);

/// Inner product with a fixed summation order; every search path uses it
/// so exact and approximate scores are bit-identical.
float dot(std::span<const float> a, std::span<const float> b);

} // namespace clir::dense
