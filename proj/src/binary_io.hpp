#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "clir/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian; big-endian hosts need byte swapping");

namespace clir::detail {

/// Append-only little-endian byte buffer.
class ByteWriter {
public:
    template <typename T>
        requires std::is_arithmetic_v<T>
    void put(T value)
    {
        const auto* p = reinterpret_cast<const unsigned char*>(&value);
        bytes_.insert(bytes_.end(), p, p + sizeof(T));
    }

    template <typename T>
        requires std::is_arithmetic_v<T>
    void put_span(std::span<const T> values)
    {
        const auto* p = reinterpret_cast<const unsigned char*>(values.data());
        bytes_.insert(bytes_.end(), p, p + values.size_bytes());
    }

    void put_bytes(std::string_view raw) { bytes_.insert(bytes_.end(), raw.begin(), raw.end()); }

    /// u32 length prefix followed by the raw bytes.
    void put_string(std::string_view s)
    {
        put(static_cast<std::uint32_t>(s.size()));
        put_bytes(s);
    }

    void pad_to(std::size_t size)
    {
        if (bytes_.size() < size) {
            bytes_.resize(size, 0);
        }
    }

    const std::vector<unsigned char>& bytes() const { return bytes_; }
    std::size_t size() const { return bytes_.size(); }

private:
    std::vector<unsigned char> bytes_;
};

/// Bounds-checked reader over a byte buffer; overruns raise DataError.
class ByteReader {
public:
    ByteReader(std::span<const unsigned char> bytes, std::string what)
        : bytes_(bytes), what_(std::move(what))
    {}

    template <typename T>
        requires std::is_arithmetic_v<T>
    T get()
    {
        T value;
        std::memcpy(&value, take(sizeof(T)), sizeof(T));
        return value;
    }

    template <typename T>
        requires std::is_arithmetic_v<T>
    void get_span(std::span<T> out)
    {
        std::memcpy(out.data(), take(out.size_bytes()), out.size_bytes());
    }

    std::string get_bytes(std::size_t n)
    {
        const auto* p = take(n);
        return {reinterpret_cast<const char*>(p), n};
    }

    std::string get_string() { return get_bytes(get<std::uint32_t>()); }

    void seek(std::size_t pos)
    {
        if (pos > bytes_.size()) {
            fail();
        }
        pos_ = pos;
    }

    std::size_t position() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    const unsigned char* take(std::size_t n)
    {
        if (n > remaining()) {
            fail();
        }
        const auto* p = bytes_.data() + pos_;
        pos_ += n;
        return p;
    }

    [[noreturn]] void fail() const { throw DataError(what_ + ": truncated or corrupted file"); }

    std::span<const unsigned char> bytes_;
    std::size_t pos_ = 0;
    std::string what_;
};

std::vector<unsigned char> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const unsigned char> bytes);

} // namespace clir::detail
