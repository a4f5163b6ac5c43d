// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>

namespace ivyfake::detail {

/// Contents of a file under core/data/, compiled into the library.
/// Throws std::out_of_range for unknown names.
std::string_view embedded_file(std::string_view name);

}  // namespace ivyfake::detail
