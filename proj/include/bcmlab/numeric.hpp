#pragma once

#include <cmath>
#include <cstdint>
#include <span>

namespace bcmlab {

/// Neumaier-compensated accumulator.
class compensated_sum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    compensated_sum& operator+=(double x) noexcept {
        add(x);
        return *this;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double accurate_sum(std::span<const double> xs) noexcept {
    compensated_sum s;
    for (double x : xs) s += x;
    return s.value();
}

constexpr std::int64_t choose3(std::int64_t d) noexcept {
    return d < 3 ? 0 : d * (d - 1) * (d - 2) / 6;
}

constexpr std::int64_t choose2(std::int64_t d) noexcept {
    return d < 2 ? 0 : d * (d - 1) / 2;
}

} // namespace bcmlab
