// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>

namespace gdiff {

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

/// Level from the GD_LOG environment variable (quiet | info | debug),
/// read once; defaults to info.
LogLevel log_level();
void set_log_level(LogLevel level);

void log_info(std::string_view message);
void log_debug(std::string_view message);
/// Always printed, regardless of level.
void log_error(std::string_view message);

}  // namespace gdiff
