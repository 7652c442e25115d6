#pragma once

#include <tbb/blocked_range.h>
#include <tbb/info.h>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

#include <algorithm>
#include <cstddef>

namespace tdd {

/// Runs body(i) for i in [0, count) on at most `jobs` threads (0: all cores),
/// never more than the available cores.
/// Callers write results into pre-sized slots, so output order never
/// depends on scheduling.
template <class Body>
void parallel_for_index(std::size_t count, int jobs, Body&& body) {
    if (count == 0) return;
    if (jobs == 1 || count == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    const int cores = tbb::info::default_concurrency();
    tbb::task_arena arena(jobs > 0 ? std::min(jobs, cores) : cores);
    arena.execute([&] {
        tbb::parallel_for(tbb::blocked_range<std::size_t>(0, count), [&](const tbb::blocked_range<std::size_t>& r) {
            for (std::size_t i = r.begin(); i != r.end(); ++i) body(i);
        });
    });
}

}  // namespace tdd
