#pragma once

#include <functional>
#include <vector>

namespace spinal {

// dy/dt = f(t, y), written into dy.
using OdeRhs = std::function<void(double t, const double* y, double* dy)>;

struct OdeOptions {
  double atol = 1e-10;
  double rtol = 1e-10;
  double max_step = 0.0;  // 0: unbounded
  double initial_step = 0.0;
  std::size_t max_steps = 10000000;
};

// Accepted steps of an integration: values and derivatives at every node.
struct OdeSolution {
  int dim = 0;
  std::vector<double> times;
  std::vector<double> values;  // row-major, one row of `dim` per node
  std::vector<double> derivs;

  std::size_t nodes() const { return times.size(); }
  const double* value(std::size_t i) const { return values.data() + i * static_cast<std::size_t>(dim); }
  const double* deriv(std::size_t i) const { return derivs.data() + i * static_cast<std::size_t>(dim); }
  // Node index j with times[j] <= t <= times[j+1].
  std::size_t cell(double t) const;
  // Cubic Hermite interpolation of all components at t into out.
  void interpolate(double t, double* out) const;
  double interpolate(double t, int component) const;
};

// Dormand-Prince 5(4) with max-norm error control. Integrates from t0 to t1
// (t1 >= t0). `on_step`, if set, may veto a step by returning false, which
// halves the step (used for positivity checks).
OdeSolution integrate_dopri(const OdeRhs& f, int dim, const std::vector<double>& y0, double t0, double t1,
                            const OdeOptions& opt,
                            const std::function<bool(const double* y)>& accept_state = {});

}  // namespace spinal
