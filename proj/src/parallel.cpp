#include "hypbranch/parallel.hpp"

#include <cstdlib>
#include <string>

namespace hypbranch {

std::size_t worker_count() {
    if (const char* env = std::getenv("HYPBRANCH_WORKERS")) {
        try {
            long v = std::stol(env);
            if (v > 0) return static_cast<std::size_t>(v);
        } catch (...) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

} // namespace hypbranch
