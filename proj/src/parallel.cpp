#include "opkrr/parallel.hpp"

#include <omp.h>

#include <charconv>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <string_view>

namespace opkrr {

int thread_count() { return omp_get_max_threads(); }

void set_thread_count(int threads) { omp_set_num_threads(threads < 1 ? 1 : threads); }

int configure_threads_from_env() {
  const char* raw = std::getenv("OPKRR_THREADS");
  if (raw == nullptr || *raw == '\0') return thread_count();
  std::string_view text(raw);
  int value = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size() || value < 1) {
    throw std::invalid_argument("OPKRR_THREADS must be a positive integer, got '" +
                                std::string(text) + "'");
  }
  set_thread_count(value);
  return value;
}

namespace detail {

void parallel_for_impl(std::ptrdiff_t count, void (*body)(void*, std::ptrdiff_t), void* ctx,
                       bool dynamic) {
  if (dynamic) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < count; ++i) body(ctx, i);
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i) body(ctx, i);
  }
}

}  // namespace detail
}  // namespace opkrr
