#pragma once

namespace vax {

/// Worker threads used by the OpenMP kernels. 0 restores the runtime default.
void set_threads(int threads);
int max_threads();

}  // namespace vax
