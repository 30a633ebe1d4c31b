#pragma once

#include <functional>

namespace dbnlc {

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Each index is
/// processed exactly once; callers keep determinism by writing result i
/// into a preallocated slot and never reducing across threads.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

} // namespace dbnlc
