// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace ivyfake::detail {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Stable 64-bit FNV-1a; used to derive per-stratum seeds from names.
std::uint64_t fnv1a64(std::string_view s) noexcept;

/// Uniform draw in [0, bound) from mt19937_64 by rejection. Portable across
/// standard libraries, unlike std::uniform_int_distribution.
std::uint64_t bounded_draw(std::mt19937_64& gen, std::uint64_t bound);

template <typename T>
void seeded_shuffle(std::vector<T>& items, std::uint64_t seed) {
  std::mt19937_64 gen(splitmix64(seed));
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(bounded_draw(gen, i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace ivyfake::detail
