#include "spinal/msolver.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <algorithm>
#include <cmath>
#include <ostream>

#include "spinal/ode.hpp"

namespace spinal {

void GeneratorMatrix::multiply(const double* x, double* y) const {
  const std::size_t n = size();
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int p = row_ptr[i]; p < row_ptr[i + 1]; ++p) acc += vals[static_cast<std::size_t>(p)] * x[cols[static_cast<std::size_t>(p)]];
    y[i] = acc;
  }
}

double GeneratorMatrix::entry(std::size_t i, std::size_t j) const {
  for (int p = row_ptr[i]; p < row_ptr[i + 1]; ++p)
    if (static_cast<std::size_t>(cols[static_cast<std::size_t>(p)]) == j) return vals[static_cast<std::size_t>(p)];
  return 0.0;
}

std::vector<double> GeneratorMatrix::dense() const {
  const std::size_t n = size();
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (int p = row_ptr[i]; p < row_ptr[i + 1]; ++p) d[i * n + static_cast<std::size_t>(cols[static_cast<std::size_t>(p)])] += vals[static_cast<std::size_t>(p)];
  return d;
}

GeneratorMatrix build_generator(const ModelSpec& model, std::shared_ptr<const StateIndex> index) {
  const int D = model.dim();
  if (index->dim() != D || index->K() != model.K()) throw ModelError("state index does not match the model");
  GeneratorMatrix G;
  G.index = index;
  const std::size_t n = index->size();
  G.row_ptr.reserve(n + 1);
  G.row_ptr.push_back(0);
  std::vector<std::pair<int, double>> row;
  Counts nz(static_cast<std::size_t>(D));
  auto target = [&](int x, const int* z, const OffspringEvent& ev) {
    for (int w = 0; w < D; ++w) nz[static_cast<std::size_t>(w)] = z[w] + ev.offspring[static_cast<std::size_t>(w)];
    --nz[static_cast<std::size_t>(ev.parent)];
    const long j = index->find(x, nz);
    if (j < 0) throw ModelError("generator target outside the state index");
    return static_cast<int>(j);
  };
  for (std::size_t i = 0; i < n; ++i) {
    const int x = index->type_of(i);
    const int* z = index->counts_of(i);
    row.clear();
    double out = 0.0;
    for (int e : model.events_of(x)) {
      const double r = model.rate_counts(e, z);
      if (r <= 0.0) continue;
      const auto& ev = model.event(e);
      out += r;
      for (int y = 0; y < D; ++y)
        if (ev.offspring[static_cast<std::size_t>(y)] > 0) row.emplace_back(target(y, z, ev), ev.offspring[static_cast<std::size_t>(y)] * r);
    }
    for (int e = 0; e < model.num_events(); ++e) {
      const auto& ev = model.event(e);
      const int mult = z[ev.parent] - (ev.parent == x ? 1 : 0);
      if (mult <= 0) continue;
      const double r = model.rate_counts(e, z);
      if (r <= 0.0) continue;
      out += mult * r;
      row.emplace_back(target(x, z, ev), mult * r);
    }
    row.emplace_back(static_cast<int>(i), -out);
    std::sort(row.begin(), row.end());
    for (std::size_t p = 0; p < row.size();) {
      const int col = row[p].first;
      double v = 0.0;
      for (; p < row.size() && row[p].first == col; ++p) v += row[p].second;
      G.cols.push_back(col);
      G.vals.push_back(v);
    }
    G.row_ptr.push_back(static_cast<int>(G.cols.size()));
  }
  return G;
}

std::vector<double> psi_vector(const ModelSpec& model, const StateIndex& index) {
  std::vector<double> psi(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) psi[i] = model.psi_counts(index.type_of(i), index.counts_of(i));
  return psi;
}

MTable::MTable(std::shared_ptr<const StateIndex> index, std::vector<double> grid, std::vector<double> values,
               std::vector<double> derivs)
    : index_(std::move(index)), n_(index_->size()), grid_(std::move(grid)), values_(std::move(values)) {
  logv_.resize(values_.size());
  dlog_.resize(values_.size());
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!(values_[k] > 0.0)) throw ModelError("m table has a nonpositive value");
    logv_[k] = std::log(values_[k]);
    dlog_[k] = derivs[k] / values_[k];
  }
}

std::size_t MTable::cell(double t) const {
  const double T = horizon();
  if (!(t >= 0.0) || t > T * (1 + 1e-12) + 1e-15) throw ModelError("m_at: time outside [0, T]");
  if (grid_.size() < 2) return 0;
  const auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
  const auto j = static_cast<std::ptrdiff_t>(it - grid_.begin()) - 1;
  return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(j, 0, static_cast<std::ptrdiff_t>(grid_.size()) - 2));
}

double MTable::m_in_cell(std::size_t i, std::size_t j, double t) const {
  if (grid_.size() < 2) return values_[i];
  const double t0 = grid_[j];
  const double h = grid_[j + 1] - t0;
  const double u = (t - t0) / h;
  if (u == 0.0) return values_[j * n_ + i];
  if (u == 1.0) return values_[(j + 1) * n_ + i];
  const double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
  const double h10 = u * (1 - u) * (1 - u);
  const double h01 = u * u * (3 - 2 * u);
  const double h11 = u * u * (u - 1);
  const std::size_t a = j * n_ + i, b = (j + 1) * n_ + i;
  return std::exp(h00 * logv_[a] + h * h10 * dlog_[a] + h01 * logv_[b] + h * h11 * dlog_[b]);
}

double MTable::m_at(int x, const Counts& z, double t) const {
  const long i = index_->find(x, z);
  if (i < 0) throw ModelError("m_at: state not in the table");
  return m_at_index(static_cast<std::size_t>(i), t);
}

void MTable::write(std::ostream& out) const {
  const auto& idx = *index_;
  out << "state,type";
  for (int w = 0; w < idx.dim(); ++w) out << ",z" << w;
  out << ",time,value\n";
  out.precision(17);
  for (std::size_t j = 0; j < grid_.size(); ++j)
    for (std::size_t i = 0; i < n_; ++i) {
      out << i << ',' << idx.type_of(i);
      for (int w = 0; w < idx.dim(); ++w) out << ',' << idx.counts_of(i)[w];
      out << ',' << grid_[j] << ',' << value(j, i) << '\n';
    }
}

MTable solve_m(const GeneratorMatrix& G, const std::vector<double>& psi, double T, const MSolveOptions& opt) {
  const std::size_t n = G.size();
  if (psi.size() != n) throw ModelError("psi vector has wrong size");
  for (double v : psi)
    if (!(v > 0.0)) throw ModelError("psi must be positive on every state");
  if (!(T >= 0.0)) throw ModelError("horizon must be nonnegative");
  OdeOptions o;
  o.atol = o.rtol = opt.tol;
  o.max_step = T * opt.max_step_fraction;
  auto rhs = [&G](double, const double* y, double* dy) { G.multiply(y, dy); };
  auto positive = [n](const double* y) {
    for (std::size_t i = 0; i < n; ++i)
      if (!(y[i] > 0.0)) return false;
    return true;
  };
  OdeSolution sol;
  try {
    sol = integrate_dopri(rhs, static_cast<int>(n), psi, 0.0, T, o, positive);
  } catch (const std::runtime_error&) {
    throw ModelError("m solver: nonpositive value encountered (tolerance too loose or invalid model)");
  }
  return MTable(G.index, std::move(sol.times), std::move(sol.values), std::move(sol.derivs));
}

MTable solve_m(const ModelSpec& model, double T, const MSolveOptions& opt) {
  auto idx = enumerate_states(model);
  const auto G = build_generator(model, idx);
  return solve_m(G, psi_vector(model, *idx), T, opt);
}

std::vector<double> dense_m(const GeneratorMatrix& G, const std::vector<double>& psi, double T) {
  const std::size_t n = G.size();
  if (n > 512) throw ModelError("dense exponential limited to n <= 512");
  const auto d = G.dense();
  Eigen::MatrixXd A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d[i * n + j] * T;
  const Eigen::MatrixXd E = A.exp();
  const Eigen::VectorXd v = E * Eigen::Map<const Eigen::VectorXd>(psi.data(), static_cast<Eigen::Index>(n));
  return std::vector<double>(v.data(), v.data() + n);
}

ToyClosedForm::ToyClosedForm(double b_, double c_) : b(b_), c(c_) {
  if (!(b > 0.0) || !(c > 0.0)) throw ModelError("toy closed form needs b, c > 0");
  delta = 9 * b * b + 9 * c * c - 2 * b * c;
  sqrt_delta = std::sqrt(delta);
  lambda_plus = 3 * b + 3 * c + sqrt_delta;
  lambda_minus = 3 * b + 3 * c - sqrt_delta;
}

std::array<double, 4> ToyClosedForm::m(double t) const {
  const double sd = sqrt_delta;
  const double wp = -lambda_minus / (10 * sd) * std::exp(-lambda_plus * t / 2);
  const double wm = lambda_plus / (10 * sd) * std::exp(-lambda_minus * t / 2);
  const std::array<double, 4> vp{(3 * b - 3 * c + sd) / (2 * c), -(3 * b + c + sd) / (2 * c), 1.0, 1.0};
  const std::array<double, 4> vm{(3 * b - 3 * c - sd) / (2 * c), -(3 * b + c - sd) / (2 * c), 1.0, 1.0};
  const std::array<double, 4> base{8.0 / 5, 4.0 / 5, 4.0 / 5, 4.0 / 5};
  std::array<double, 4> out{};
  for (int i = 0; i < 4; ++i) out[static_cast<std::size_t>(i)] = base[static_cast<std::size_t>(i)] + wp * vp[static_cast<std::size_t>(i)] + wm * vm[static_cast<std::size_t>(i)];
  return out;
}

double ToyClosedForm::rho(double t, double s) const {
  const double tau = t - s;
  const double sd = sqrt_delta;
  const double ep = std::exp(-lambda_plus * tau / 2);
  const double em = std::exp(-lambda_minus * tau / 2);
  const double num = 16 * c * sd + lambda_minus * (3 * b + c + sd) * ep - lambda_plus * (3 * b + c - sd) * em;
  const double den =
      32 * c * sd + lambda_minus * (-3 * b + 3 * c - sd) * ep - lambda_plus * (-3 * b + 3 * c + sd) * em;
  return 2 * b * num / den;
}

std::array<double, 4> toy_m_closed_form(double b, double c, double t) { return ToyClosedForm(b, c).m(t); }

double toy_rho_closed_form(double b, double c, double t, double s) {
  if (!(s >= 0.0) || s > t) throw ModelError("toy rho needs 0 <= s <= t");
  return ToyClosedForm(b, c).rho(t, s);
}

}  // namespace spinal
