#pragma once

#include <cstddef>
#include <functional>

namespace cde {

//! Worker count: hardware concurrency, capped by the CDE_THREADS environment
//! variable when set.
size_t
thread_count();

//! Calls body(i) for i in [0, count) on up to thread_count() threads.
//!
//! Indices are handed out one at a time; body must only write to storage
//! owned by index i. The first exception thrown by any body is
//! rethrown after all workers finish. Calls made from inside a worker run
//! serially.
void
parallel_for(size_t count, const std::function<void(size_t)>& body);

} // namespace cde
