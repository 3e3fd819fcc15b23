#pragma once

#include <cstddef>
#include <exception>

namespace aee {

/// Runs body(i) for i in [0, n) on the OpenMP team. The first exception
/// thrown by any iteration is rethrown on the calling thread once the loop
/// has drained. Iterations must write only to their own slots.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
    std::exception_ptr error;
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
#pragma omp critical(aee_parallel_for_error)
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace aee
