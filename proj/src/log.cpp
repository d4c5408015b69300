// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "gdiff/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace gdiff {

namespace {

LogLevel level_from_env() {
  const char* env = std::getenv("GD_LOG");
  if (env == nullptr) return LogLevel::info;
  const std::string v(env);
  if (v == "quiet") return LogLevel::quiet;
  if (v == "debug") return LogLevel::debug;
  return LogLevel::info;
}

std::atomic<int>& level_slot() {
  static std::atomic<int> slot{static_cast<int>(level_from_env())};
  return slot;
}

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

void emit(const char* tag, std::string_view message) {
  std::lock_guard lock(sink_mutex());
  std::cerr << "[gdiff " << tag << "] " << message << '\n';
}

}  // namespace

LogLevel log_level() { return static_cast<LogLevel>(level_slot().load()); }
void set_log_level(LogLevel level) { level_slot().store(static_cast<int>(level)); }

void log_info(std::string_view message) {
  if (log_level() >= LogLevel::info) emit("info", message);
}

void log_debug(std::string_view message) {
  if (log_level() >= LogLevel::debug) emit("debug", message);
}

void log_error(std::string_view message) { emit("error", message); }

}  // namespace gdiff
