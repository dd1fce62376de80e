#pragma once

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>

namespace dstack {

// Verbosity from DSTACK_LOG: "quiet" (0), "info" (1, default) or "debug" (2).
inline int log_level() {
  static const int level = [] {
    const char* v = std::getenv("DSTACK_LOG");
    if (!v) return 1;
    const std::string s(v);
    if (s == "quiet" || s == "0") return 0;
    if (s == "debug" || s == "2") return 2;
    return 1;
  }();
  return level;
}

// Writes one line to stderr when `level` is enabled.
template <typename... Args>
void log_line(int level, const Args&... args) {
  if (level > log_level()) return;
  std::ostringstream os;
  (os << ... << args);
  std::cerr << os.str() << std::endl;
}

}  // namespace dstack
