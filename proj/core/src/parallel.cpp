#include "latticelab/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace latticelab {

namespace {
std::atomic<int> g_override{0};
}

int worker_count() {
  int o = g_override.load();
  if (o > 0) return o;
  if (const char* env = std::getenv("LATTICE_LAB_THREADS")) {
    try {
      int v = std::stoi(env);
      if (v > 0) return v;
    } catch (...) {
    }
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void set_worker_count(int n) { g_override.store(n > 0 ? n : 0); }

}  // namespace latticelab
