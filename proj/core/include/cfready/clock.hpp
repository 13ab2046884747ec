#pragma once

#include <cstdint>
#include <mutex>

namespace cfready {

// Time source used by the upstream client and the prediction cache.
// `now()` is monotonic seconds; `unix_now()` is wall-clock seconds.
class Clock {
public:
    virtual ~Clock() = default;

    virtual double now() = 0;
    virtual std::int64_t unix_now() = 0;
    virtual void sleep_until(double monotonic_seconds) = 0;

    void sleep_for(double seconds) { sleep_until(now() + seconds); }
};

class SystemClock final : public Clock {
public:
    double now() override;
    std::int64_t unix_now() override;
    void sleep_until(double monotonic_seconds) override;
};

// Deterministic clock for tests: sleeping advances time instantly.
class SimulatedClock final : public Clock {
public:
    explicit SimulatedClock(double start = 0.0, std::int64_t unix_start = 1'700'000'000)
        : now_(start), unix_start_(unix_start), start_(start) {}

    double now() override;
    std::int64_t unix_now() override;
    void sleep_until(double monotonic_seconds) override;

    void advance(double seconds);
    double total_slept() const;

private:
    mutable std::mutex mutex_;
    double now_;
    std::int64_t unix_start_;
    double start_;
    double slept_ = 0.0;
};

} // namespace cfready
