// SPDX-License-Identifier: MIT
#pragma once

#include <cstddef>
#include <functional>

namespace attnopt {

/// Worker count: ATTNOPT_THREADS if set and positive, else hardware concurrency.
int thread_count();

/// Runs body(i) for i in [0, count) on up to thread_count() threads.
/// Work is claimed dynamically; results must be written to per-index slots.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace attnopt
