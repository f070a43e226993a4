#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace coinprune {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// 32-byte digest. Ordering and equality are plain byte comparisons.
class Hash256 {
public:
    static constexpr std::size_t kSize = 32;

    constexpr Hash256() = default;
    explicit constexpr Hash256(const std::array<std::uint8_t, kSize>& bytes) : bytes_(bytes) {}

    /// Throws std::invalid_argument unless `bytes.size() == 32`.
    static Hash256 from_span(ByteView bytes);
    /// Strict: exactly 64 lowercase hex characters.
    static std::optional<Hash256> from_hex(std::string_view hex);

    const std::array<std::uint8_t, kSize>& bytes() const { return bytes_; }
    ByteView view() const { return {bytes_.data(), bytes_.size()}; }
    std::uint8_t* data() { return bytes_.data(); }
    std::string hex() const;
    bool is_zero() const;

    auto operator<=>(const Hash256&) const = default;

private:
    std::array<std::uint8_t, kSize> bytes_{};
};

struct Hash256Hasher {
    std::size_t operator()(const Hash256& h) const noexcept;
};

Hash256 sha256(ByteView data);
/// SHA-256 applied twice.
Hash256 hash256(ByteView data);
inline Hash256 hash256(std::string_view text) {
    return hash256(ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string to_hex(ByteView data);
/// Accepts either case; returns nullopt on odd length or non-hex input.
std::optional<Bytes> parse_hex(std::string_view hex);

inline ByteView as_bytes(std::string_view s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace coinprune
