#include "proofloop/core/clock.hpp"

#include <chrono>
#include <ctime>

namespace proofloop {

double SystemClock::elapsed_seconds() const {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
}

std::string SystemClock::timestamp() const {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

const Clock& system_clock() {
    static const SystemClock clock;
    return clock;
}

}  // namespace proofloop
