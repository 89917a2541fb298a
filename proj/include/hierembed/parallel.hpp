#ifndef HIEREMBED_PARALLEL_HPP
#define HIEREMBED_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace hierembed {

/// Worker cap for parallel evaluation. Initialised from HIEREMBED_THREADS,
/// otherwise 1. Results never depend on this value.
[[nodiscard]] std::size_t thread_count();
void set_thread_count(std::size_t n);

/// Calls fn(i) for i in [0, n). Each index is written by exactly one worker, so
/// callers that store into slot i get identical output for any thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace hierembed

#endif  // HIEREMBED_PARALLEL_HPP
