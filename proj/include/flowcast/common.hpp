#pragma once

#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>

namespace flowcast {

// Error taxonomy mirrors the CLI exit codes: usage/config problems (2),
// data problems (3), numerical divergence during training (4).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(int epoch, const std::string& what)
      : std::runtime_error(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

// Worker count for parallel sections. FLOWCAST_THREADS caps it; 0 or unset
// means one worker per hardware thread.
inline int thread_budget() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("FLOWCAST_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) {
      return static_cast<int>(v < static_cast<long>(hw) ? v : hw);
    }
  }
  return static_cast<int>(hw);
}

}  // namespace flowcast
