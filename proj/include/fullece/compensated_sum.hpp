#pragma once

#include <cmath>

namespace fullece {

/// Neumaier-compensated running sum of doubles.
class CompensatedSum {
 public:
  CompensatedSum() = default;
  static CompensatedSum from_parts(double sum, double compensation) {
    CompensatedSum s;
    s.sum_ = sum;
    s.comp_ = compensation;
    return s;
  }

  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  void merge(const CompensatedSum& other) {
    add(other.sum_);
    comp_ += other.comp_;
  }

  double value() const { return sum_ + comp_; }
  double raw_sum() const { return sum_; }
  double compensation() const { return comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace fullece
