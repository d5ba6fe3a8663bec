#pragma once

#include <cstdint>
#include <functional>

namespace fresco {

// Worker count: FRESCO_THREADS env var if set, else hardware concurrency.
int thread_count();

// Runs f(i) for i in [0, n). Tasks must write only to their own slots; the
// loop makes no ordering guarantee. Re-entrant calls run inline.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& f,
                  std::int64_t grain = 1);

}  // namespace fresco
