#pragma once

#include <chrono>
#include <mutex>
#include <string>

namespace pescourse {

using Seconds = std::chrono::duration<double>;
using Days = std::chrono::duration<double, std::ratio<86400>>;
/// Wall-clock instant with sub-second resolution, UTC.
using Timestamp = std::chrono::time_point<std::chrono::system_clock, Seconds>;

inline double to_epoch_seconds(Timestamp t) { return t.time_since_epoch().count(); }
inline Timestamp from_epoch_seconds(double s) { return Timestamp(Seconds(s)); }

/// "2024-10-01T12:00:00Z" (whole seconds, UTC).
std::string format_iso8601(Timestamp t);

/// Injected time source. Nothing in the library reads the ambient clock
/// except SystemClock.
class Clock {
  public:
    virtual ~Clock() = default;
    virtual Timestamp now() const = 0;
};

class SystemClock final : public Clock {
  public:
    Timestamp now() const override;
};

class ManualClock final : public Clock {
  public:
    explicit ManualClock(Timestamp start = from_epoch_seconds(1'700'000'000.0)) : now_(start) {}

    Timestamp now() const override {
        std::lock_guard lock(mutex_);
        return now_;
    }
    void set(Timestamp t) {
        std::lock_guard lock(mutex_);
        now_ = t;
    }
    void advance(Seconds d) {
        std::lock_guard lock(mutex_);
        now_ += d;
    }

  private:
    mutable std::mutex mutex_;
    Timestamp now_;
};

}  // namespace pescourse
