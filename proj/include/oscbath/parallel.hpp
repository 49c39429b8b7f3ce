#pragma once

#include <cstdint>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace oscbath {

// Worker-count resolution: explicit request > OSCBATH_WORKERS > OpenMP default.
// A request of 0 means "use the default".
inline int resolve_workers(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("OSCBATH_WORKERS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// Static partition of [0, n) over `workers` threads. Every iteration writes
// only its own output slots, so results are identical for any worker count.
template <class Body>
inline void parallel_for_index(std::int64_t n, int workers, Body&& body) {
#ifdef _OPENMP
    if (workers > 1 && n > 1) {
#pragma omp parallel for schedule(static) num_threads(workers)
        for (std::int64_t i = 0; i < n; ++i) body(i);
        return;
    }
#endif
    (void)workers;
    for (std::int64_t i = 0; i < n; ++i) body(i);
}

}  // namespace oscbath
