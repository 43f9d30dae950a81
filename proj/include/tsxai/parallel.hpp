#pragma once

#include <cstddef>
#include <functional>

namespace tsxai {

/// Runs fn(0) .. fn(count - 1) on up to `workers` threads (0 means one per
/// hardware thread). Each index runs exactly once; if any calls throw, the
/// exception of the lowest failing index is rethrown after all threads join.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace tsxai
