// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include <nlohmann/json.hpp>

namespace ivyfake {

/// Side of one encoder tile and of every resized video frame, in pixels.
inline constexpr int kTilePx = 384;
/// 2304 / 384: the largest grid side the dynamic-resolution path accepts.
inline constexpr int kMaxTilesPerSide = 6;
inline constexpr int kMaxTiles = kMaxTilesPerSide * kMaxTilesPerSide;
/// 27x27 patch grid per 384x384 unit.
inline constexpr int kPatchGridSide = 27;
inline constexpr int kRawTokensPerUnit = kPatchGridSide * kPatchGridSide;

/// How the odd 27-wide patch grid is halved by 2x2 pooling.
enum class PoolingRule { ceil, floor };

int pooled_tokens_per_unit(PoolingRule rule = PoolingRule::ceil) noexcept;

/// Tiling for one image. The source is resized preserving aspect ratio into
/// the (content_w, content_h) box, then padded bottom/right with black to
/// (resized_w, resized_h).
struct TileGrid {
  int cols = 1;
  int rows = 1;
  int tile_px = kTilePx;
  int resized_w = kTilePx;
  int resized_h = kTilePx;
  int content_w = kTilePx;
  int content_h = kTilePx;

  int tiles() const noexcept { return cols * rows; }
};

/// Throws DomainError for non-positive dimensions.
TileGrid plan_tiles(int width, int height);

/// Frames sampled at 1 fps starting at t=0, each resized to frame_px square.
struct FramePlan {
  std::vector<double> timestamps_s;
  int frame_px = kTilePx;

  std::size_t frames() const noexcept { return timestamps_s.size(); }
};

/// Timestamps 0,1,2,... strictly below duration_s (always at least one).
/// Throws DomainError unless duration_s is finite and positive.
FramePlan plan_frames(double duration_s);

struct TokenBudget {
  int per_unit_raw = kRawTokensPerUnit;
  int per_unit_pooled = 0;
  std::size_t units = 0;
  std::size_t total_raw = 0;
  std::size_t total_pooled = 0;
};

TokenBudget token_budget(const TileGrid& grid, PoolingRule rule = PoolingRule::ceil);
/// Frames are concatenated; no temporal reduction.
TokenBudget token_budget(const FramePlan& plan, PoolingRule rule = PoolingRule::ceil);

nlohmann::ordered_json to_json(const TileGrid& g);
nlohmann::ordered_json to_json(const FramePlan& p);
nlohmann::ordered_json to_json(const TokenBudget& b);

}  // namespace ivyfake
