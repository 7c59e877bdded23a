#pragma once

#include <cstddef>
#include <vector>

namespace spinal {

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct Estimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

// Sample mean and standard error (two-pass, compensated).
Estimate summarize(const std::vector<double>& xs);

// Standard error of the mean from non-overlapping batch means.
double batch_means_se(const std::vector<double>& xs, std::size_t batches);

// (a - b) / sqrt(se_a^2 + se_b^2); 0 when both are exact and equal.
double standardized_gap(double a, double se_a, double b, double se_b);

// Product of an exact scalar and an estimate.
Estimate scale(const Estimate& e, double factor);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
};

// Least squares y = intercept + slope * x.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace spinal
