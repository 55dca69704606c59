#include "pescourse/clock.hpp"

#include <cmath>
#include <ctime>

namespace pescourse {

std::string format_iso8601(Timestamp t) {
    const auto secs = static_cast<std::time_t>(std::floor(to_epoch_seconds(t)));
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

Timestamp SystemClock::now() const {
    return std::chrono::time_point_cast<Seconds>(std::chrono::system_clock::now());
}

}  // namespace pescourse
