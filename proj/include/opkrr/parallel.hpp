#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

namespace opkrr {

/// Selects between the OpenMP kernels and their serial reference versions.
/// Both paths produce bitwise-identical results for the same inputs.
enum class Execution { serial, parallel };

/// Number of threads the parallel paths will use.
int thread_count();

/// Caps the OpenMP thread count. Values < 1 are clamped to 1.
void set_thread_count(int threads);

/// Reads OPKRR_THREADS and applies it if set. Returns the resulting count.
/// Throws std::invalid_argument if the variable is set but not a positive integer.
int configure_threads_from_env();

namespace detail {
void parallel_for_impl(std::ptrdiff_t count, void (*body)(void*, std::ptrdiff_t), void* ctx,
                       bool dynamic);
}  // namespace detail

/// Runs fn(i) for i in [0, count). Iterations must write to disjoint state.
/// The first exception thrown by any iteration is rethrown on the caller.
template <class Fn>
void for_each_index(std::ptrdiff_t count, Execution exec, Fn&& fn, bool dynamic = false) {
  if (exec == Execution::serial || count < 2) {
    for (std::ptrdiff_t i = 0; i < count; ++i) fn(i);
    return;
  }
  struct Ctx {
    Fn* fn;
    std::exception_ptr error;
    std::mutex mutex;
  } ctx{&fn, nullptr, {}};
  detail::parallel_for_impl(
      count,
      [](void* raw, std::ptrdiff_t i) {
        auto* c = static_cast<Ctx*>(raw);
        try {
          (*c->fn)(i);
        } catch (...) {
          std::lock_guard lock(c->mutex);
          if (!c->error) c->error = std::current_exception();
        }
      },
      &ctx, dynamic);
  if (ctx.error) std::rethrow_exception(ctx.error);
}

}  // namespace opkrr
