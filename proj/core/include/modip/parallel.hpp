#pragma once

#include "types.hpp"

#include <functional>

namespace modip {

// Process-wide worker count for numeric kernels. Defaults to 1.
void set_num_threads(int n);
int num_threads();

/* Runs body(i) for i in [0, count). Work items are independent and each writes only its own
 * outputs, so results do not depend on the thread count.
 */
void parallel_for(Index count, std::function<void(Index)> const &body);

} // namespace modip
