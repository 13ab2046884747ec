#pragma once

#include <mutex>
#include <optional>

namespace cfready {

// Reserves upstream request slots at least `interval` seconds apart.
// One instance is shared by every caller in the process.
class RateLimiter {
public:
    explicit RateLimiter(double interval_seconds = 1.0);

    // Returns the earliest time the caller may issue its request; the slot is
    // reserved on return, so permitted times never collide.
    double acquire_request_slot(double now);

    double interval() const noexcept { return interval_; }

private:
    std::mutex mutex_;
    double interval_;
    std::optional<double> last_permit_;
};

} // namespace cfready
