#pragma once

#include <cstddef>
#include <span>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace erc::par {

/// Worker count used by the parallel kernels. Resolution order:
/// set_worker_count() > ERC_WORKERS env var > OpenMP default > 1.
int worker_count();
void set_worker_count(int n); // n <= 0 resets to the environment default

/// Static-schedule parallel loop over [0, n). The body must write only to
/// per-index slots; results are then identical for any worker count.
template <class F>
void parallel_for(std::size_t n, F&& body) {
#ifdef _OPENMP
    const int workers = worker_count();
    if (workers > 1 && n > 1) {
#pragma omp parallel for schedule(static) num_threads(workers)
        for (long long i = 0; i < static_cast<long long>(n); ++i)
            body(static_cast<std::size_t>(i));
        return;
    }
#endif
    for (std::size_t i = 0; i < n; ++i) body(i);
}

/// Serial twin of parallel_for, kept as the reference implementation.
template <class F>
void serial_for(std::size_t n, F&& body) {
    for (std::size_t i = 0; i < n; ++i) body(i);
}

/// Fixed-order pairwise sum; deterministic regardless of worker count
/// because it runs over a fully materialized array.
double pairwise_sum(std::span<const double> xs);

} // namespace erc::par
