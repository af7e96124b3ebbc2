#pragma once

#include <cstddef>
#include <functional>

namespace conic_ricci {

/// Worker cap: CONIC_RICCI_THREADS if set and positive, else hardware concurrency.
std::size_t thread_cap();

/// Runs body(i) for i in [0, count). Each index is processed exactly once; results
/// must be written to per-index slots so the outcome does not depend on scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace conic_ricci
