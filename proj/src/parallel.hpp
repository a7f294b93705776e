#pragma once

#include <exception>

namespace spikectl::detail {

// Runs body(i) for i in [0, count), in parallel when OpenMP is enabled.
// The first exception thrown by any iteration is rethrown on the caller.
template <class Body>
void parallel_for(int count, Body&& body) {
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 64)
    for (int i = 0; i < count; ++i) {
        try {
            body(i);
        } catch (...) {
#pragma omp critical(spikectl_parallel_error)
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace spikectl::detail
