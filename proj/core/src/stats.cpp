#include "spinal/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace spinal {

void CompensatedSum::add(double v) {
  const double t = sum_ + v;
  if (std::abs(sum_) >= std::abs(v))
    comp_ += (sum_ - t) + v;
  else
    comp_ += (v - t) + sum_;
  sum_ = t;
}

Estimate summarize(const std::vector<double>& xs) {
  Estimate e;
  e.n = xs.size();
  if (xs.empty()) return e;
  CompensatedSum s;
  for (double v : xs) s.add(v);
  e.mean = s.value() / double(xs.size());
  if (xs.size() < 2) return e;
  CompensatedSum sq;
  for (double v : xs) sq.add((v - e.mean) * (v - e.mean));
  const double var = sq.value() / double(xs.size() - 1);
  e.se = std::sqrt(var / double(xs.size()));
  return e;
}

double batch_means_se(const std::vector<double>& xs, std::size_t batches) {
  if (batches < 2 || xs.size() < batches) throw std::invalid_argument("batch_means_se: need at least 2 nonempty batches");
  const std::size_t len = xs.size() / batches;
  std::vector<double> means(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    CompensatedSum s;
    for (std::size_t i = b * len; i < (b + 1) * len; ++i) s.add(xs[i]);
    means[b] = s.value() / double(len);
  }
  return summarize(means).se;
}

double standardized_gap(double a, double se_a, double b, double se_b) {
  const double se = std::sqrt(se_a * se_a + se_b * se_b);
  const double d = a - b;
  if (se == 0.0) return d == 0.0 ? 0.0 : std::copysign(INFINITY, d);
  return d / se;
}

Estimate scale(const Estimate& e, double factor) { return {e.mean * factor, e.se * std::abs(factor), e.n}; }

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw std::invalid_argument("fit_line: need at least two points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= double(n);
  my /= double(n);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (n > 2) {
    double rss = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - f.intercept - f.slope * x[i];
      rss += r * r;
    }
    f.slope_se = std::sqrt(rss / double(n - 2) / sxx);
  }
  return f;
}

}  // namespace spinal
