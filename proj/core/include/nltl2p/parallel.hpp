#pragma once

#include <cstddef>
#include <functional>

namespace nltl2p {

/// Worker cap. Defaults to the NLTL2P_THREADS environment variable when set,
/// otherwise std::thread::hardware_concurrency().
std::size_t worker_count();

/// Override the worker cap for this process (0 restores the default).
void set_worker_count(std::size_t n);

/// Run body(i) for i in [0, n). Iterations must be independent; each index is
/// visited exactly once. Falls back to a serial loop for a single worker.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace nltl2p
