#include <algorithm>
#include <cmath>
#include <ostream>

#include "spinal/lln.hpp"

namespace spinal {

namespace {

void flow_rhs(const ModelSpec& model, const double* z, double* dz) {
  const int D = model.dim();
  std::fill(dz, dz + D, 0.0);
  for (int e = 0; e < model.num_events(); ++e) {
    const auto& ev = model.event(e);
    const double zx = z[ev.parent];
    if (zx == 0.0) continue;
    const double r = zx * model.rate_normalized(e, z);
    for (int y = 0; y < D; ++y) dz[y] += r * ev.offspring[static_cast<std::size_t>(y)];
    dz[ev.parent] -= r;
  }
}

// Derivative of the cubic Hermite interpolant at the middle of cell j.
double hermite_mid_slope(const OdeSolution& sol, std::size_t j, int i) {
  const double h = sol.times[j + 1] - sol.times[j];
  return 1.5 * (sol.value(j + 1)[i] - sol.value(j)[i]) / h - 0.25 * (sol.deriv(j)[i] + sol.deriv(j + 1)[i]);
}

}  // namespace

std::vector<double> drift_matrix(const ModelSpec& model, const double* z) {
  const int D = model.dim();
  std::vector<double> A(static_cast<std::size_t>(D * D), 0.0);
  for (int e = 0; e < model.num_events(); ++e) {
    const auto& ev = model.event(e);
    const double r = model.rate_normalized(e, z);
    const auto row = static_cast<std::size_t>(ev.parent * D);
    for (int y = 0; y < D; ++y) A[row + static_cast<std::size_t>(y)] += r * ev.offspring[static_cast<std::size_t>(y)];
    A[row + static_cast<std::size_t>(ev.parent)] -= r;
  }
  return A;
}

FlowBundle::FlowBundle(const ModelSpec& model, std::vector<double> z0, double T, const FlowOptions& opt)
    : model_(model), z0_(std::move(z0)) {
  const int D = model_.dim();
  if (static_cast<int>(z0_.size()) != D) throw ModelError("initial composition has wrong dimension");
  const double slack = std::max(1e-12, 10 * opt.tol);
  auto inside = [D, slack](const double* z) {
    double s = 0.0;
    for (int i = 0; i < D; ++i) {
      if (!(z[i] >= -slack)) return false;
      s += z[i];
    }
    return s <= 1.0 + slack;
  };
  if (!inside(z0_.data())) throw ModelError("initial composition is outside the simplex-box");
  if (!(T >= 0.0)) throw ModelError("horizon must be nonnegative");
  OdeOptions o;
  o.atol = o.rtol = opt.tol;
  o.max_step = T * opt.max_step_fraction;
  const ModelSpec* m = &model_;
  try {
    sol_ = integrate_dopri([m](double, const double* y, double* dy) { flow_rhs(*m, y, dy); }, D, z0_, 0.0, T, o,
                           inside);
  } catch (const std::runtime_error&) {
    throw ModelError("flow leaves the simplex-box by more than the tolerance");
  }
}

FlowBundle solve_flow(const ModelSpec& model, const std::vector<double>& z0, double T, const FlowOptions& opt) {
  return FlowBundle(model, z0, T, opt);
}

std::vector<double> FlowBundle::z_at(double s) const {
  std::vector<double> z(static_cast<std::size_t>(dim()));
  z_at(s, z.data());
  return z;
}

double FlowBundle::residual() const {
  const int D = dim();
  std::vector<double> z(static_cast<std::size_t>(D)), f(static_cast<std::size_t>(D));
  double worst = 0.0;
  for (std::size_t j = 0; j + 1 < sol_.nodes(); ++j) {
    const double mid = 0.5 * (sol_.times[j] + sol_.times[j + 1]);
    sol_.interpolate(mid, z.data());
    flow_rhs(model_, z.data(), f.data());
    double r = 0.0;
    for (int i = 0; i < D; ++i) r += std::abs(hermite_mid_slope(sol_, j, i) - f[static_cast<std::size_t>(i)]);
    worst = std::max(worst, r);
  }
  return worst;
}

void FlowBundle::write(std::ostream& out) const {
  out << "s";
  for (const auto& n : model_.types().names) out << ",z_" << n;
  out << '\n';
  out.precision(15);
  for (std::size_t j = 0; j < sol_.nodes(); ++j) {
    out << sol_.times[j];
    for (int i = 0; i < dim(); ++i) out << ',' << sol_.value(j)[i];
    out << '\n';
  }
}

double FlowTrack::coordinate(int x, double s) const {
  thread_local std::vector<double> z;
  z.resize(static_cast<std::size_t>(flow_.dim()));
  flow_.z_at(s, z.data());
  return z[static_cast<std::size_t>(x)];
}

MCharacteristic::MCharacteristic(const FlowBundle& flow, double t, double tol)
    : flow_(flow), t_(t), D_(flow.dim()) {
  if (!(t >= 0.0) || t > flow.horizon() * (1 + 1e-12)) throw ModelError("characteristic horizon exceeds the flow");
  OdeOptions o;
  o.atol = o.rtol = tol;
  o.max_step = t / 256;
  const FlowBundle* fl = &flow_;
  const double tt = t_;
  const int D = D_;
  auto rhs = [fl, tt, D](double sigma, const double* u, double* du) {
    thread_local std::vector<double> z;
    z.resize(static_cast<std::size_t>(D));
    fl->z_at(std::max(0.0, tt - sigma), z.data());
    const auto A = drift_matrix(fl->model(), z.data());
    for (int x = 0; x < D; ++x) {
      double acc = 0.0;
      for (int y = 0; y < D; ++y) acc += A[static_cast<std::size_t>(x * D + y)] * u[y];
      du[x] = acc;
    }
  };
  auto positive = [D](const double* u) {
    for (int i = 0; i < D; ++i)
      if (!(u[i] > 0.0)) return false;
    return true;
  };
  try {
    sol_ = integrate_dopri(rhs, D, std::vector<double>(static_cast<std::size_t>(D), 1.0), 0.0, t, o, positive);
  } catch (const std::runtime_error&) {
    throw ModelError("characteristic solver: nonpositive u encountered");
  }
  logv_.resize(sol_.values.size());
  dlog_.resize(sol_.values.size());
  for (std::size_t k = 0; k < sol_.values.size(); ++k) {
    logv_[k] = std::log(sol_.values[k]);
    dlog_[k] = sol_.derivs[k] / sol_.values[k];
  }
}

MCharacteristic solve_m_characteristics(const FlowBundle& flow, double t, double tol) {
  return MCharacteristic(flow, t, tol);
}

double MCharacteristic::u_in_cell(int x, std::size_t j, double sigma) const {
  if (sol_.nodes() < 2) return 1.0;
  const double h = sol_.times[j + 1] - sol_.times[j];
  const double v = (sigma - sol_.times[j]) / h;
  const std::size_t a = j * static_cast<std::size_t>(D_) + static_cast<std::size_t>(x);
  const std::size_t b = a + static_cast<std::size_t>(D_);
  if (v == 0.0) return sol_.values[a];
  if (v == 1.0) return sol_.values[b];
  const double h00 = (1 + 2 * v) * (1 - v) * (1 - v);
  const double h10 = v * (1 - v) * (1 - v);
  const double h01 = v * v * (3 - 2 * v);
  const double h11 = v * v * (v - 1);
  return std::exp(h00 * logv_[a] + h * h10 * dlog_[a] + h01 * logv_[b] + h * h11 * dlog_[b]);
}

double MCharacteristic::u(int x, double s) const {
  if (s < -1e-12 || s > t_ * (1 + 1e-12) + 1e-15) throw ModelError("characteristic queried outside [0, t]");
  const double sigma = std::clamp(t_ - s, 0.0, t_);
  return u_in_cell(x, sol_.cell(sigma), sigma);
}

void MCharacteristic::u_all(double s, double* out) const {
  for (int x = 0; x < D_; ++x) out[x] = u(x, s);
}

double MCharacteristic::residual() const {
  const int D = D_;
  std::vector<double> z(static_cast<std::size_t>(D)), um(static_cast<std::size_t>(D));
  double worst = 0.0;
  for (std::size_t j = 0; j + 1 < sol_.nodes(); ++j) {
    const double s0 = sol_.times[j], s1 = sol_.times[j + 1], sm = 0.5 * (s0 + s1);
    for (int x = 0; x < D; ++x) um[static_cast<std::size_t>(x)] = u_in_cell(x, j, sm);
    flow_.z_at(std::max(0.0, t_ - sm), z.data());
    const auto A = drift_matrix(flow_.model(), z.data());
    for (int x = 0; x < D; ++x) {
      double mid = 0.0;
      for (int y = 0; y < D; ++y) mid += A[static_cast<std::size_t>(x * D + y)] * um[static_cast<std::size_t>(y)];
      const double quad = (s1 - s0) / 6 * (sol_.deriv(j)[x] + 4 * mid + sol_.deriv(j + 1)[x]);
      const double inc = sol_.value(j + 1)[x] - sol_.value(j)[x];
      worst = std::max(worst, std::abs(inc - quad) / std::max(1.0, std::abs(sol_.value(j + 1)[x])));
    }
  }
  return worst;
}

void MCharacteristic::write(std::ostream& out, const FlowBundle& flow) const {
  const auto& names = flow.model().types().names;
  out << "s";
  for (const auto& n : names) out << ",z_" << n;
  for (const auto& n : names) out << ",u_" << n;
  out << '\n';
  out.precision(15);
  std::vector<double> z(static_cast<std::size_t>(D_));
  for (std::size_t j = sol_.nodes(); j-- > 0;) {
    const double s = t_ - sol_.times[j];
    flow.z_at(std::max(0.0, s), z.data());
    out << s;
    for (double v : z) out << ',' << v;
    for (int x = 0; x < D_; ++x) out << ',' << sol_.value(j)[x];
    out << '\n';
  }
}

double flow_lipschitz_constant(const ModelSpec& model) {
  double L = 0.0;
  for (const auto& ev : model.events()) {
    int jump = 0;
    for (std::size_t y = 0; y < ev.offspring.size(); ++y)
      jump += std::abs(ev.offspring[y] - (static_cast<int>(y) == ev.parent ? 1 : 0));
    L += jump * (ev.rate.sup_bound() + ev.rate.lipschitz_bound());
  }
  return L;
}

double flow_lipschitz_check(const ModelSpec& model, const std::vector<double>& z1, const std::vector<double>& z2,
                            double t) {
  double d0 = 0.0;
  for (std::size_t i = 0; i < z1.size(); ++i) d0 += std::abs(z1[i] - z2[i]);
  if (d0 == 0.0) return 0.0;
  const FlowBundle f1(model, z1, t), f2(model, z2, t);
  std::vector<double> a(z1.size()), b(z1.size());
  std::vector<double> probes = f1.solution().times;
  probes.insert(probes.end(), f2.solution().times.begin(), f2.solution().times.end());
  double worst = 0.0;
  for (double s : probes) {
    f1.z_at(s, a.data());
    f2.z_at(s, b.data());
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
    worst = std::max(worst, d);
  }
  return worst / d0;
}

}  // namespace spinal
