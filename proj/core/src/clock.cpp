#include "cfready/clock.hpp"

#include <chrono>
#include <thread>

namespace cfready {

double SystemClock::now() {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
}

std::int64_t SystemClock::unix_now() {
    using namespace std::chrono;
    return duration_cast<seconds>(system_clock::now().time_since_epoch()).count();
}

void SystemClock::sleep_until(double monotonic_seconds) {
    const double delta = monotonic_seconds - now();
    if (delta > 0) std::this_thread::sleep_for(std::chrono::duration<double>(delta));
}

double SimulatedClock::now() {
    std::lock_guard lock(mutex_);
    return now_;
}

std::int64_t SimulatedClock::unix_now() {
    std::lock_guard lock(mutex_);
    return unix_start_ + static_cast<std::int64_t>(now_ - start_);
}

void SimulatedClock::sleep_until(double monotonic_seconds) {
    std::lock_guard lock(mutex_);
    if (monotonic_seconds > now_) {
        slept_ += monotonic_seconds - now_;
        now_ = monotonic_seconds;
    }
}

void SimulatedClock::advance(double seconds) {
    std::lock_guard lock(mutex_);
    now_ += seconds;
}

double SimulatedClock::total_slept() const {
    std::lock_guard lock(mutex_);
    return slept_;
}

} // namespace cfready
