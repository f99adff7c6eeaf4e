#pragma once

#include <cstddef>
#include <functional>

namespace xray {

/// Worker count: XRAY_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
int worker_count();

/// Runs body(begin, end) over [0, n) split into contiguous blocks of at most
/// `grain` items. Blocks are fixed by (n, grain) alone, so callers that
/// reduce per block get thread-count independent results. Calls made from
/// inside a worker run inline.
void parallel_for(std::size_t n, std::size_t grain,
                  const std::function<void(std::size_t, std::size_t)>& body);

/// Runs job(i) for i in [0, n) on up to worker_count() threads.
void parallel_jobs(std::size_t n, const std::function<void(std::size_t)>& job);

}  // namespace xray
