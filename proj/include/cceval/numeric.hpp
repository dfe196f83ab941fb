#pragma once

#include <cmath>

namespace cceval {

// Neumaier compensated accumulator. Used wherever many small terms are
// reduced to one number so results stay deterministic for a fixed traversal
// order and do not drift with cancellation.
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::fabs(sum_) >= std::fabs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }

    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

} // namespace cceval
