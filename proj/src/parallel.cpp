#include "semreg/parallel.hpp"

#include <omp.h>

#include <algorithm>

namespace semreg {

namespace {
int g_default_threads = -1;
}

void set_thread_count(int n) {
  if (g_default_threads < 0) g_default_threads = omp_get_max_threads();
  omp_set_num_threads(n > 0 ? n : g_default_threads);
}

int thread_count() { return omp_get_max_threads(); }

ScopedThreadCount::ScopedThreadCount(int n) : previous_(omp_get_max_threads()) { set_thread_count(n); }

ScopedThreadCount::~ScopedThreadCount() { omp_set_num_threads(previous_); }

namespace {

template <typename Combine>
double chunked_reduce(std::size_t n, double init, const std::function<double(std::size_t)>& term,
                      Combine combine) {
  if (n == 0) return init;
  const std::size_t chunks = std::min(kReductionChunks, n);
  std::vector<double> partial(chunks, init);
  const std::ptrdiff_t chunk_count = static_cast<std::ptrdiff_t>(chunks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < chunk_count; ++c) {
    const std::size_t begin = n * static_cast<std::size_t>(c) / chunks;
    const std::size_t end = n * static_cast<std::size_t>(c + 1) / chunks;
    double acc = init;
    for (std::size_t i = begin; i < end; ++i) acc = combine(acc, term(i));
    partial[static_cast<std::size_t>(c)] = acc;
  }
  double total = init;
  for (double p : partial) total = combine(total, p);
  return total;
}

} // namespace

double deterministic_sum(std::size_t n, const std::function<double(std::size_t)>& term) {
  return chunked_reduce(n, 0.0, term, [](double a, double b) { return a + b; });
}

double deterministic_max(std::size_t n, double init, const std::function<double(std::size_t)>& term) {
  return chunked_reduce(n, init, term, [](double a, double b) { return std::max(a, b); });
}

} // namespace semreg
