#pragma once

#include <cmath>

namespace paems {

/// Neumaier compensated sum; result is insensitive to accumulation order
/// at the 1e-15 relative level.
class CompensatedSum {
   public:
    void add(double v) {
        double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v)) {
            comp_ += (sum_ - t) + v;
        } else {
            comp_ += (v - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

   private:
    double sum_ = 0;
    double comp_ = 0;
};

}  // namespace paems
