#pragma once

#include <optional>

namespace bayesgam {

/// Sets the OpenMP team size used by the parallel kernels. n <= 0 keeps the runtime default.
void set_thread_count(int n);
int thread_count();

/// Thread count from an explicit flag, else the BAYESGAM_THREADS environment variable,
/// else the OpenMP default.
int resolve_thread_count(std::optional<int> flag);

}  // namespace bayesgam
