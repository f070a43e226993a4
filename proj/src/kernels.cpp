#include "coinprune/kernels.hpp"

#include <omp.h>

#include <cstddef>

namespace coinprune::kernels {

namespace {
constexpr std::size_t kParallelMinItems = 8;
constexpr std::size_t kParallelMinBytes = 256 * 1024;
}  // namespace

std::vector<Hash256> serial::hash_each(std::span<const ByteView> items) {
    std::vector<Hash256> out;
    out.reserve(items.size());
    for (const auto& item : items) out.push_back(hash256(item));
    return out;
}

std::vector<Hash256> omp::hash_each(std::span<const ByteView> items) {
    std::vector<Hash256> out(items.size());
    const auto n = static_cast<std::ptrdiff_t>(items.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = hash256(items[static_cast<std::size_t>(i)]);
    return out;
}

std::vector<Hash256> hash_each(std::span<const ByteView> items) {
    std::size_t total = 0;
    for (const auto& item : items) total += item.size();
    if (items.size() >= kParallelMinItems && total >= kParallelMinBytes && omp_get_max_threads() > 1)
        return omp::hash_each(items);
    return serial::hash_each(items);
}

}  // namespace coinprune::kernels
