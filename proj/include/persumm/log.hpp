#pragma once

#include <iostream>
#include <mutex>
#include <string_view>

namespace persumm {

// Line-atomic logging to standard error; safe from worker threads.
inline void log_line(std::string_view component, std::string_view message) {
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << '[' << component << "] " << message << '\n';
}

}  // namespace persumm
