#include "poolforge/runtime.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <thread>

namespace poolforge {

namespace {

bool read_env() {
  const char* v = std::getenv("POOLFORGE_VERIFY");
  return v != nullptr && std::strcmp(v, "1") == 0;
}

std::atomic<bool>& flag() {
  static std::atomic<bool> value{read_env()};
  return value;
}

}  // namespace

bool verify_mode() { return flag().load(); }

void set_verify_mode(bool enabled) { flag().store(enabled); }

unsigned worker_threads() {
  if (verify_mode()) return 1;
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

}  // namespace poolforge
