#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace semreg {

/// Caps the number of OpenMP workers. n <= 0 restores the runtime default.
void set_thread_count(int n);
int thread_count();

/// RAII guard that restores the previous worker count on scope exit.
class ScopedThreadCount {
 public:
  explicit ScopedThreadCount(int n);
  ~ScopedThreadCount();
  ScopedThreadCount(const ScopedThreadCount&) = delete;
  ScopedThreadCount& operator=(const ScopedThreadCount&) = delete;

 private:
  int previous_;
};

// Reductions are split into a fixed number of contiguous chunks whose partial
// results are combined in chunk order. The chunking never depends on the
// number of threads, so sums are bit-identical for any worker count.
inline constexpr std::size_t kReductionChunks = 64;

/// Deterministic parallel sum of term(i) for i in [0, n).
double deterministic_sum(std::size_t n, const std::function<double(std::size_t)>& term);

/// Deterministic parallel max of term(i) for i in [0, n); returns `init` when n == 0.
double deterministic_max(std::size_t n, double init, const std::function<double(std::size_t)>& term);

} // namespace semreg
