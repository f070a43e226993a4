#pragma once
// Data-parallel hashing kernels. `serial` is the reference; `omp` is the
// OpenMP version and must return identical output for any thread count.

#include <span>
#include <vector>

#include "coinprune/hash.hpp"

namespace coinprune::kernels {

namespace serial {
std::vector<Hash256> hash_each(std::span<const ByteView> items);
}

namespace omp {
std::vector<Hash256> hash_each(std::span<const ByteView> items);
}

/// Picks the OpenMP path once the batch is worth the fork/join.
std::vector<Hash256> hash_each(std::span<const ByteView> items);

}  // namespace coinprune::kernels
