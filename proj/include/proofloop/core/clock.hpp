#pragma once

#include <string>

namespace proofloop {

class Clock {
public:
    virtual ~Clock() = default;
    // Monotonic seconds, for durations.
    virtual double elapsed_seconds() const = 0;
    // ISO-8601 UTC wall time, for ledger rows.
    virtual std::string timestamp() const = 0;
};

class SystemClock final : public Clock {
public:
    double elapsed_seconds() const override;
    std::string timestamp() const override;
};

// Frozen clock; makes transcripts and ledgers reproducible in tests.
class FixedClock final : public Clock {
public:
    explicit FixedClock(std::string stamp = "1970-01-01T00:00:00Z") : stamp_(std::move(stamp)) {}
    double elapsed_seconds() const override { return 0.0; }
    std::string timestamp() const override { return stamp_; }

private:
    std::string stamp_;
};

const Clock& system_clock();

}  // namespace proofloop
