#include "lhsim/parallel.hpp"

#include <cstdlib>
#include <string>

namespace lhsim {

unsigned default_jobs() {
    if (const char* env = std::getenv("LHSIM_JOBS"); env != nullptr && *env != '\0') {
        try {
            const long v = std::stol(env);
            if (v >= 1) return static_cast<unsigned>(v);
        } catch (const std::exception&) {
            // fall through to hardware concurrency
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

} // namespace lhsim
