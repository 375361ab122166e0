#pragma once

#include <cstddef>
#include <functional>

namespace gibbs_ot {

/// Worker count from GIBBS_OT_THREADS (0 or unset = hardware concurrency).
std::size_t worker_count();

/// Calls fn(k) for k in [0, n) on up to `workers` threads. Work items must be
/// independent; results must not depend on which thread runs which item.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  std::size_t workers = worker_count());

}  // namespace gibbs_ot
