// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "ivyfake/chat_backend.hpp"
#include "ivyfake/corpus.hpp"
#include "ivyfake/media.hpp"

namespace ivyfake::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitBackend = 3;

/// Seams for tests; every member falls back to the production default.
struct Hooks {
  std::function<std::shared_ptr<ChatBackend>(const TeacherConfig&)> backend_factory;
  const MediaEncoder* encoder = nullptr;
  ProbeFn probe;
  SleepFn sleep;
  const std::atomic<bool>* cancel = nullptr;
  /// Called by `serve` with the bound port before it blocks.
  std::function<void(int port)> on_listening;
};

/// Runs one command line (args excludes the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const Hooks& hooks = {});

}  // namespace ivyfake::cli
