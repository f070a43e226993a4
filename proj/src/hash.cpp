#include "coinprune/hash.hpp"

#include <openssl/evp.h>

#include <cstring>
#include <stdexcept>

namespace coinprune {

namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

}  // namespace

Hash256 Hash256::from_span(ByteView bytes) {
    if (bytes.size() != kSize)
        throw std::invalid_argument("Hash256 requires exactly 32 bytes, got " + std::to_string(bytes.size()));
    Hash256 h;
    std::memcpy(h.bytes_.data(), bytes.data(), kSize);
    return h;
}

std::optional<Hash256> Hash256::from_hex(std::string_view hex) {
    if (hex.size() != 2 * kSize) return std::nullopt;
    Hash256 h;
    for (std::size_t i = 0; i < kSize; ++i) {
        const char hi = hex[2 * i], lo = hex[2 * i + 1];
        const bool lower_hi = (hi >= '0' && hi <= '9') || (hi >= 'a' && hi <= 'f');
        const bool lower_lo = (lo >= '0' && lo <= '9') || (lo >= 'a' && lo <= 'f');
        if (!lower_hi || !lower_lo) return std::nullopt;
        h.bytes_[i] = static_cast<std::uint8_t>(hex_value(hi) << 4 | hex_value(lo));
    }
    return h;
}

std::string Hash256::hex() const { return to_hex(view()); }

bool Hash256::is_zero() const {
    for (auto b : bytes_)
        if (b != 0) return false;
    return true;
}

std::size_t Hash256Hasher::operator()(const Hash256& h) const noexcept {
    std::size_t out;
    std::memcpy(&out, h.bytes().data(), sizeof(out));
    return out;
}

Hash256 sha256(ByteView data) {
    Hash256 out;
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != Hash256::kSize)
        throw std::runtime_error("EVP_Digest(sha256) failed");
    return out;
}

Hash256 hash256(ByteView data) {
    const Hash256 first = sha256(data);
    return sha256(first.view());
}

std::string to_hex(ByteView data) {
    std::string out;
    out.reserve(data.size() * 2);
    for (auto b : data) {
        out.push_back(kHexDigits[b >> 4]);
        out.push_back(kHexDigits[b & 0xf]);
    }
    return out;
}

std::optional<Bytes> parse_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) return std::nullopt;
    Bytes out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const int hi = hex_value(hex[2 * i]);
        const int lo = hex_value(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) return std::nullopt;
        out[i] = static_cast<std::uint8_t>(hi << 4 | lo);
    }
    return out;
}

}  // namespace coinprune
