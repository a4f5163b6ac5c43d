// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#include "ivyfake/preproc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ivyfake/errors.hpp"

namespace ivyfake {
namespace {

int tiles_for(int pixels) {
  const long long n = (static_cast<long long>(pixels) + kTilePx - 1) / kTilePx;
  return static_cast<int>(std::clamp<long long>(n, 1, kMaxTilesPerSide));
}

}  // namespace

int pooled_tokens_per_unit(PoolingRule rule) noexcept {
  const int side = rule == PoolingRule::ceil ? (kPatchGridSide + 1) / 2 : kPatchGridSide / 2;
  return side * side;
}

TileGrid plan_tiles(int width, int height) {
  if (width < 1 || height < 1) {
    throw DomainError("image dimensions must be positive, got " + std::to_string(width) + "x" +
                      std::to_string(height));
  }
  TileGrid g;
  g.cols = tiles_for(width);
  g.rows = tiles_for(height);
  g.resized_w = g.cols * kTilePx;
  g.resized_h = g.rows * kTilePx;

  const double scale = std::min(static_cast<double>(g.resized_w) / width,
                                static_cast<double>(g.resized_h) / height);
  g.content_w = std::clamp(static_cast<int>(std::lround(width * scale)), 1, g.resized_w);
  g.content_h = std::clamp(static_cast<int>(std::lround(height * scale)), 1, g.resized_h);
  return g;
}

FramePlan plan_frames(double duration_s) {
  if (!std::isfinite(duration_s) || duration_s <= 0.0) {
    throw DomainError("video duration must be positive, got " + std::to_string(duration_s));
  }
  const double whole = std::floor(duration_s);
  const auto count = static_cast<std::size_t>(whole == duration_s ? whole : whole + 1.0);
  FramePlan plan;
  plan.timestamps_s.reserve(count);
  for (std::size_t i = 0; i < count; ++i) plan.timestamps_s.push_back(static_cast<double>(i));
  return plan;
}

namespace {

TokenBudget budget_for(std::size_t units, PoolingRule rule) {
  TokenBudget b;
  b.per_unit_pooled = pooled_tokens_per_unit(rule);
  b.units = units;
  b.total_raw = units * static_cast<std::size_t>(b.per_unit_raw);
  b.total_pooled = units * static_cast<std::size_t>(b.per_unit_pooled);
  return b;
}

}  // namespace

TokenBudget token_budget(const TileGrid& grid, PoolingRule rule) {
  return budget_for(static_cast<std::size_t>(grid.tiles()), rule);
}

TokenBudget token_budget(const FramePlan& plan, PoolingRule rule) {
  return budget_for(plan.frames(), rule);
}

nlohmann::ordered_json to_json(const TileGrid& g) {
  return {{"cols", g.cols},           {"rows", g.rows},           {"tiles", g.tiles()},
          {"tile_px", g.tile_px},     {"resized_w", g.resized_w}, {"resized_h", g.resized_h},
          {"content_w", g.content_w}, {"content_h", g.content_h}};
}

nlohmann::ordered_json to_json(const FramePlan& p) {
  return {{"frames", p.frames()}, {"frame_px", p.frame_px}, {"timestamps_s", p.timestamps_s}};
}

nlohmann::ordered_json to_json(const TokenBudget& b) {
  return {{"per_unit_raw", b.per_unit_raw},
          {"per_unit_pooled", b.per_unit_pooled},
          {"units", b.units},
          {"total_raw", b.total_raw},
          {"total_pooled", b.total_pooled}};
}

}  // namespace ivyfake
