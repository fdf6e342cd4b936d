#include "clir/embedding.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "binary_io.hpp"
#include "clir/error.hpp"
#include "line_reader.hpp"

namespace clir::dense {

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> data)
    : rows_(rows)
    , dim_(dim)
    , data_(std::move(data))
{
    if (data_.size() != rows_ * dim_) {
        throw DataError("embedding matrix: payload holds " + std::to_string(data_.size()) +
                        " values, header implies " + std::to_string(rows_ * dim_));
    }
}

EmbeddingMatrix EmbeddingMatrix::select_rows(std::span<const std::size_t> rows) const
{
    std::vector<float> out;
    out.reserve(rows.size() * dim_);
    for (auto r : rows) {
        auto src = row(r);
        out.insert(out.end(), src.begin(), src.end());
    }
    return EmbeddingMatrix(rows.size(), dim_, std::move(out));
}

IdMap::IdMap(std::vector<std::string> ids)
    : ids_(std::move(ids))
{
    rows_.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (!rows_.emplace(ids_[i], i).second) {
            throw DataError("duplicate id '" + ids_[i] + "' in id map");
        }
    }
}

std::size_t IdMap::row_of(std::string_view id) const
{
    auto it = rows_.find(std::string(id));
    if (it == rows_.end()) {
        throw DataError("unknown id '" + std::string(id) + "'");
    }
    return it->second;
}

bool IdMap::contains(std::string_view id) const
{
    return rows_.contains(std::string(id));
}

float dot(std::span<const float> a, std::span<const float> b)
{
    // Eight independent partial sums, combined in a fixed order.
    float acc[8] = {};
    const std::size_t n = a.size();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        for (std::size_t j = 0; j < 8; ++j) {
            acc[j] += a[i + j] * b[i + j];
        }
    }
    for (; i < n; ++i) {
        acc[i % 8] += a[i] * b[i];
    }
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

namespace {

double row_norm(std::span<const float> row)
{
    double sq = 0.0;
    for (float v : row) {
        sq += static_cast<double>(v) * v;
    }
    return std::sqrt(sq);
}

} // namespace

LoadReport enforce_unit_norm(EmbeddingMatrix& matrix, std::string_view source)
{
    LoadReport report;
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
        auto row = matrix.row(i);
        for (float v : row) {
            if (!std::isfinite(v)) {
                throw DataError(std::string(source) + ": non-finite value in row " +
                                std::to_string(i));
            }
        }
        const double norm = row_norm(row);
        const double dev = std::abs(norm - 1.0);
        report.max_norm_deviation = std::max(report.max_norm_deviation, dev);
        if (dev > kRenormalizeLimit) {
            throw DataError(std::string(source) + ": row " + std::to_string(i) + " has norm " +
                            std::to_string(norm) + ", expected unit-norm embeddings");
        }
        if (dev > kUnitNormTolerance) {
            for (auto& v : row) {
                v = static_cast<float>(v / norm);
            }
            ++report.renormalized_rows;
        }
    }
    return report;
}

void l2_normalize(EmbeddingMatrix& matrix)
{
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
        auto row = matrix.row(i);
        const double norm = row_norm(row);
        if (!(norm > 0.0) || !std::isfinite(norm)) {
            throw DataError("cannot normalize row " + std::to_string(i) + " (zero or non-finite)");
        }
        for (auto& v : row) {
            v = static_cast<float>(v / norm);
        }
    }
}

namespace {
constexpr char kMagic[4] = {'C', 'L', 'R', 'E'};
constexpr std::uint8_t kDtypeF32 = 1;
} // namespace

std::vector<unsigned char> serialize_matrix(const EmbeddingMatrix& matrix)
{
    detail::ByteWriter w;
    w.put_bytes({kMagic, 4});
    w.put(kMatrixFormatVersion);
    w.put(static_cast<std::uint64_t>(matrix.rows()));
    w.put(static_cast<std::uint32_t>(matrix.dim()));
    w.put(kDtypeF32);
    w.pad_to(kMatrixHeaderSize);
    w.put_span(matrix.data());
    return w.bytes();
}

EmbeddingMatrix deserialize_matrix(std::span<const unsigned char> bytes, std::string_view source)
{
    const std::string what(source);
    detail::ByteReader r(bytes, what);
    if (bytes.size() < kMatrixHeaderSize || r.get_bytes(4) != std::string_view(kMagic, 4)) {
        throw DataError(what + ": not an embedding matrix file (bad magic)");
    }
    const auto version = r.get<std::uint32_t>();
    if (version != kMatrixFormatVersion) {
        throw DataError(what + ": unsupported matrix version " + std::to_string(version));
    }
    const auto rows = r.get<std::uint64_t>();
    const auto dim = r.get<std::uint32_t>();
    const auto dtype = r.get<std::uint8_t>();
    if (dtype != kDtypeF32) {
        throw DataError(what + ": unsupported dtype tag " + std::to_string(dtype));
    }
    r.seek(kMatrixHeaderSize);
    const std::uint64_t row_bytes = std::uint64_t{dim} * sizeof(float);
    if ((row_bytes == 0 && rows != 0) ||
        (row_bytes != 0 && (r.remaining() % row_bytes != 0 || r.remaining() / row_bytes != rows))) {
        throw DataError(what + ": dimension mismatch: header declares " + std::to_string(rows) +
                        " x " + std::to_string(dim) + " but payload has " +
                        std::to_string(r.remaining()) + " bytes");
    }
    std::vector<float> data(rows * dim);
    r.get_span(std::span<float>(data));
    return EmbeddingMatrix(rows, dim, std::move(data));
}

std::vector<std::string> read_ids(const std::filesystem::path& path)
{
    auto in = detail::open_input(path);
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            throw DataError(path.string() + ":" + std::to_string(ids.size() + 1) + ": empty id");
        }
        ids.push_back(line);
    }
    return ids;
}

void write_ids(const std::filesystem::path& path, const IdMap& ids)
{
    auto out = detail::open_output(path);
    for (const auto& id : ids.ids()) {
        out << id << '\n';
    }
}

LoadedEmbeddings load_embeddings(const std::filesystem::path& matrix_path,
                                 const std::filesystem::path& ids_path)
{
    const auto bytes = detail::read_file_bytes(matrix_path.string());
    auto matrix = deserialize_matrix(bytes, matrix_path.string());
    auto ids = read_ids(ids_path);
    if (ids.size() != matrix.rows()) {
        throw DataError(ids_path.string() + ": id count " + std::to_string(ids.size()) +
                        " does not match matrix row count " + std::to_string(matrix.rows()));
    }
    auto report = enforce_unit_norm(matrix, matrix_path.string());
    return {std::move(matrix), IdMap(std::move(ids)), report};
}

void save_embeddings(const EmbeddingMatrix& matrix, const IdMap& ids,
                     const std::filesystem::path& matrix_path,
                     const std::filesystem::path& ids_path)
{
    if (ids.size() != matrix.rows()) {
        throw DataError("save_embeddings: id count does not match row count");
    }
    detail::write_file_bytes(matrix_path.string(), serialize_matrix(matrix));
    write_ids(ids_path, ids);
}

} // namespace clir::dense
