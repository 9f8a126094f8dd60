#include "rbsde/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace rbsde {

std::size_t thread_count() {
    static const std::size_t count = [] {
        const char* env = std::getenv("RBSDE_THREADS");
        if (env == nullptr) return std::size_t{1};
        try {
            const long v = std::stol(env);
            return v > 0 ? static_cast<std::size_t>(v) : std::size_t{1};
        } catch (...) {
            return std::size_t{1};
        }
    }();
    return count;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  std::size_t min_parallel) {
    const std::size_t workers = std::min(thread_count(), n);
    if (workers <= 1 || n < min_parallel) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(n, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back([&body, &errors, w, begin, end] {
                try {
                    for (std::size_t i = begin; i < end; ++i) body(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace rbsde
