#include "coinprune/serialize.hpp"

namespace coinprune {

ByteView Reader::bytes(std::size_t n) {
    if (n > remaining())
        throw DecodeError("truncated input: need " + std::to_string(n) + " bytes at offset " +
                          std::to_string(pos_) + ", have " + std::to_string(remaining()));
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
}

std::uint64_t Reader::get_le(int width) {
    auto raw = bytes(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(raw[i]) << (8 * i);
    return v;
}

void Reader::expect_done(const char* what) const {
    if (!done())
        throw DecodeError(std::string(what) + ": " + std::to_string(remaining()) + " trailing bytes");
}

}  // namespace coinprune
