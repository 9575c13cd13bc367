#include "erc/parallel.hpp"

#include <atomic>
#include <cstdlib>

namespace erc::par {

namespace {
std::atomic<int> g_workers{0}; // 0 = unset, use environment

int env_workers() {
    if (const char* s = std::getenv("ERC_WORKERS")) {
        const int n = std::atoi(s);
        if (n >= 1) return n;
    }
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}
} // namespace

int worker_count() {
    const int n = g_workers.load(std::memory_order_relaxed);
    return n >= 1 ? n : env_workers();
}

void set_worker_count(int n) { g_workers.store(n >= 1 ? n : 0, std::memory_order_relaxed); }

double pairwise_sum(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n <= 8) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

} // namespace erc::par
