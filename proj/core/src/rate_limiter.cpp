#include "cfready/rate_limiter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cfready/error.hpp"

namespace cfready {

RateLimiter::RateLimiter(double interval_seconds) : interval_(interval_seconds) {
    if (!(interval_seconds >= 0.0))
        throw Error(Errc::invalid_argument, "rate limit interval must be non-negative");
}

double RateLimiter::acquire_request_slot(double now) {
    std::lock_guard lock(mutex_);
    double permitted = now;
    if (last_permit_) {
        permitted = std::max(now, *last_permit_ + interval_);
        // last + interval may round down; the gap itself must not
        while (permitted - *last_permit_ < interval_)
            permitted = std::nextafter(permitted, std::numeric_limits<double>::infinity());
    }
    last_permit_ = permitted;
    return permitted;
}

} // namespace cfready
