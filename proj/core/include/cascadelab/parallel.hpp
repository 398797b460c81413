#pragma once

#include <cstddef>
#include <functional>

namespace cascadelab {

// Name of the environment variable holding the worker count.
inline constexpr const char* kThreadsEnvVar = "CASCADELAB_THREADS";

// Worker count: explicit override if set, else the environment variable,
// else the number of logical cores.
std::size_t thread_count();
void set_thread_count(std::size_t n);

// Runs body(i) for i in [0, n). Each index must write only its own output
// slot; results are then independent of the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace cascadelab
