#pragma once

#include <cstddef>
#include <exception>

namespace edlab {

// OpenMP parallel loop that carries exceptions across the join instead of
// terminating. Bodies must write only to their own slot; callers reduce the
// slots in fixed order afterwards, so results never depend on thread count.
template <class F>
void parallel_for(std::size_t n, F&& body) {
    std::exception_ptr err = nullptr;
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < n; ++i) {
        try {
            body(i);
        } catch (...) {
#pragma omp critical(edlab_parallel_for_err)
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
}

}  // namespace edlab
