#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

namespace vpe::kernels {

/// Execution policy for the data-parallel loops. `serial` is the reference
/// path kept for testing; `parallel` uses OpenMP when the build enables it.
enum class Exec { serial, parallel };

/// Applies fn(i) for i in [0, n). Iterations must be independent. The first
/// exception thrown by any iteration is rethrown after the loop.
template <class Fn>
void for_each_index(std::size_t n, Exec exec, Fn&& fn)
{
    if (exec == Exec::serial) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    const long long count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 8)
    for (long long i = 0; i < count; ++i) {
        try {
            fn(static_cast<std::size_t>(i));
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
}

int max_threads();

} // namespace vpe::kernels
