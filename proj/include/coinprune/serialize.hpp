#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "coinprune/hash.hpp"

namespace coinprune {

/// Truncated, oversized or otherwise undecodable input.
class DecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Little-endian fixed-width writer appending to a byte buffer.
class Writer {
public:
    Writer() = default;
    explicit Writer(std::size_t reserve) { buf_.reserve(reserve); }

    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u16(std::uint16_t v) { put_le(v, 2); }
    void u32(std::uint32_t v) { put_le(v, 4); }
    void u64(std::uint64_t v) { put_le(v, 8); }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void bytes(ByteView b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
    void hash(const Hash256& h) { bytes(h.view()); }

    std::size_t size() const { return buf_.size(); }
    const Bytes& data() const { return buf_; }
    Bytes take() { return std::move(buf_); }

private:
    void put_le(std::uint64_t v, int width) {
        for (int i = 0; i < width; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    Bytes buf_;
};

/// Bounds-checked little-endian reader; every read past the end throws DecodeError.
class Reader {
public:
    explicit Reader(ByteView data) : data_(data) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(get_le(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get_le(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get_le(4)); }
    std::uint64_t u64() { return get_le(8); }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    ByteView bytes(std::size_t n);
    Bytes bytes_copy(std::size_t n) {
        auto v = bytes(n);
        return Bytes(v.begin(), v.end());
    }
    Hash256 hash() { return Hash256::from_span(bytes(Hash256::kSize)); }

    std::size_t position() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }
    bool done() const { return pos_ == data_.size(); }
    /// Throws unless the whole input was consumed.
    void expect_done(const char* what) const;

private:
    std::uint64_t get_le(int width);

    ByteView data_;
    std::size_t pos_ = 0;
};

}  // namespace coinprune
