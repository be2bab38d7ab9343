#pragma once

#include <functional>

namespace symlab {

/// Worker count: `requested` if positive, else $SYMLAB_THREADS, else the
/// hardware concurrency (at least 1).
int worker_count(int requested = 0);

/// Runs job(0..count-1) over a bounded pool. Jobs must not share mutable
/// state. The first exception thrown by any job is rethrown after all workers
/// have stopped; remaining jobs are skipped once a job has failed.
void parallel_for(int count, int threads, const std::function<void(int)>& job);

}  // namespace symlab
