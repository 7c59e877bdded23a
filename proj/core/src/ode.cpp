#include "spinal/ode.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spinal {

std::size_t OdeSolution::cell(double t) const {
  if (times.size() < 2) return 0;
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const auto j = static_cast<std::ptrdiff_t>(it - times.begin()) - 1;
  return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(j, 0, static_cast<std::ptrdiff_t>(times.size()) - 2));
}

void OdeSolution::interpolate(double t, double* out) const {
  if (times.size() == 1) {
    std::copy(value(0), value(0) + dim, out);
    return;
  }
  const std::size_t j = cell(t);
  const double h = times[j + 1] - times[j];
  const double u = (t - times[j]) / h;
  const double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
  const double h10 = u * (1 - u) * (1 - u);
  const double h01 = u * u * (3 - 2 * u);
  const double h11 = u * u * (u - 1);
  const double* y0 = value(j);
  const double* y1 = value(j + 1);
  const double* d0 = deriv(j);
  const double* d1 = deriv(j + 1);
  for (int i = 0; i < dim; ++i) out[i] = h00 * y0[i] + h * h10 * d0[i] + h01 * y1[i] + h * h11 * d1[i];
}

double OdeSolution::interpolate(double t, int component) const {
  std::vector<double> buf(static_cast<std::size_t>(dim));
  interpolate(t, buf.data());
  return buf[static_cast<std::size_t>(component)];
}

OdeSolution integrate_dopri(const OdeRhs& f, int dim, const std::vector<double>& y0, double t0, double t1,
                            const OdeOptions& opt, const std::function<bool(const double*)>& accept_state) {
  if (static_cast<int>(y0.size()) != dim) throw std::invalid_argument("integrate_dopri: y0 has wrong size");
  if (t1 < t0) throw std::invalid_argument("integrate_dopri: t1 < t0");

  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  const auto n = static_cast<std::size_t>(dim);
  OdeSolution sol;
  sol.dim = dim;
  std::vector<double> y = y0, k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), ynew(n);
  f(t0, y.data(), k1.data());
  sol.times.push_back(t0);
  sol.values.insert(sol.values.end(), y.begin(), y.end());
  sol.derivs.insert(sol.derivs.end(), k1.begin(), k1.end());
  if (t1 == t0) return sol;

  const double span = t1 - t0;
  double h = opt.initial_step > 0 ? opt.initial_step : span * 1e-3;
  if (opt.max_step > 0) h = std::min(h, opt.max_step);
  double t = t0;
  std::size_t steps = 0;
  while (t < t1) {
    if (++steps > opt.max_steps) throw std::runtime_error("integrate_dopri: step budget exhausted");
    bool last = false;
    if (t + h >= t1 || t1 - (t + h) < 1e-12 * span) {
      h = t1 - t;
      last = true;
    }
    auto stage = [&](std::vector<double>& out, double ct, std::initializer_list<std::pair<double, const std::vector<double>*>> terms) {
      for (std::size_t i = 0; i < n; ++i) {
        double acc = y[i];
        for (const auto& [a, k] : terms) acc += h * a * (*k)[i];
        tmp[i] = acc;
      }
      f(t + ct * h, tmp.data(), out.data());
    };
    stage(k2, c2, {{a21, &k1}});
    stage(k3, c3, {{a31, &k1}, {a32, &k2}});
    stage(k4, c4, {{a41, &k1}, {a42, &k2}, {a43, &k3}});
    stage(k5, c5, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}});
    stage(k6, 1.0, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}});
    for (std::size_t i = 0; i < n; ++i)
      ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    f(t + h, ynew.data(), k7.data());

    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      err = std::max(err, std::abs(ei) / sc);
    }
    if (!std::isfinite(err)) err = 1e10;
    const bool state_ok = !accept_state || accept_state(ynew.data());
    if (err <= 1.0 && state_ok) {
      t = last ? t1 : t + h;
      y.swap(ynew);
      k1.swap(k7);
      sol.times.push_back(t);
      sol.values.insert(sol.values.end(), y.begin(), y.end());
      sol.derivs.insert(sol.derivs.end(), k1.begin(), k1.end());
      const double grow = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      h *= grow;
    } else {
      h *= state_ok ? std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9) : 0.5;
      if (h < 1e-14 * std::max(1.0, std::abs(t))) throw std::runtime_error("integrate_dopri: step size underflow");
    }
    if (opt.max_step > 0) h = std::min(h, opt.max_step);
  }
  return sol;
}

}  // namespace spinal
