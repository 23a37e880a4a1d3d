#pragma once

#include <functional>

#include "tpf/types.hpp"

namespace tpf {

/// Worker count from the TPF_THREADS environment variable, falling back to
/// the hardware concurrency (at least 1).
unsigned default_thread_count();

/// Resolves a requested worker count; 0 means default_thread_count().
unsigned resolve_threads(unsigned requested);

/// Runs body(task) for task in [0, n_tasks) on up to `workers` threads.
/// Task i always goes to worker i % workers, so assignment is deterministic.
void parallel_for(Index n_tasks, unsigned workers, const std::function<void(Index)>& body);

}  // namespace tpf
