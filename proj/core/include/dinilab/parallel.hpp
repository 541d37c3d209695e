#pragma once

#include <cstddef>
#include <functional>

namespace dinilab {

/// Worker count: LAB_THREADS if set (>= 1), else the hardware concurrency.
int thread_count();
/// Overrides the worker count for the process; 0 restores the environment default.
void set_thread_count(int n);

/// Runs body(begin, end) over [0, n) split into contiguous chunks.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

/// Sum of partial(begin, end) over fixed-size blocks of [0, n), added in block order.
/// The block size does not depend on the worker count, so the result is bit-identical
/// for any number of threads.
double parallel_sum(std::size_t n, const std::function<double(std::size_t, std::size_t)>& partial);

/// Max of partial(begin, end) over fixed-size blocks of [0, n).
double parallel_max(std::size_t n, const std::function<double(std::size_t, std::size_t)>& partial);

}  // namespace dinilab
