#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <vector>

#include "spinal/functional.hpp"
#include "spinal/model.hpp"
#include "spinal/ode.hpp"
#include "spinal/rng.hpp"
#include "spinal/spine.hpp"
#include "spinal/stats.hpp"

namespace spinal {

// A_{x,y}(z) = sum_k (k_y - 1{x=y}) tau_k(x, z), row-major D x D.
std::vector<double> drift_matrix(const ModelSpec& model, const double* z);

struct FlowOptions {
  double tol = 1e-10;
  double max_step_fraction = 1.0 / 200;
};

// Solution of z' = z A(z) on [0, T].
class FlowBundle {
 public:
  FlowBundle(const ModelSpec& model, std::vector<double> z0, double T, const FlowOptions& opt = {});

  const ModelSpec& model() const { return model_; }
  int dim() const { return model_.dim(); }
  double horizon() const { return sol_.times.back(); }
  const std::vector<double>& z0() const { return z0_; }
  const OdeSolution& solution() const { return sol_; }

  void z_at(double s, double* out) const { sol_.interpolate(s, out); }
  std::vector<double> z_at(double s) const;
  // max over grid cells of ||z'(mid) - z(mid) A(z(mid))||_1 using the
  // interpolant's derivative.
  double residual() const;

  void write(std::ostream& out) const;

 private:
  ModelSpec model_;
  std::vector<double> z0_;
  OdeSolution sol_;
};

FlowBundle solve_flow(const ModelSpec& model, const std::vector<double>& z0, double T, const FlowOptions& opt = {});

class FlowTrack final : public CompositionTrack {
 public:
  explicit FlowTrack(const FlowBundle& flow) : flow_(flow) {}
  double coordinate(int x, double s) const override;

 private:
  const FlowBundle& flow_;
};

// u(x, s) = frak-m(x, z(s), t - s) along the flow, from
// du/dsigma = A(z(t - sigma)) u, u(., sigma = 0) = 1, sigma = t - s.
class MCharacteristic {
 public:
  MCharacteristic(const FlowBundle& flow, double t, double tol = 1e-10);

  double horizon() const { return t_; }
  int dim() const { return D_; }
  double u(int x, double s) const;
  void u_all(double s, double* out) const;
  // sigma-grid of the solution (sigma = t - s).
  const std::vector<double>& sigma_grid() const { return sol_.times; }
  double node_value(std::size_t j, int x) const { return sol_.value(j)[x]; }
  // Per-cell mismatch between the increment and a Simpson quadrature of A u.
  double residual() const;

  // u(x) at sigma inside sigma-cell j (log-space Hermite).
  double u_in_cell(int x, std::size_t j, double sigma) const;

  void write(std::ostream& out, const FlowBundle& flow) const;

 private:

  const FlowBundle& flow_;
  double t_;
  int D_;
  OdeSolution sol_;
  std::vector<double> logv_, dlog_;
};

MCharacteristic solve_m_characteristics(const FlowBundle& flow, double t, double tol = 1e-10);

// Shared data for limit-spine simulation on [0, t].
class LimitContext {
 public:
  LimitContext(const FlowBundle& flow, double t, const MCharacteristic* mchar = nullptr);

  const FlowBundle& flow() const { return flow_; }
  const MCharacteristic* mchar() const { return mchar_; }
  double horizon() const { return t_; }
  // int_0^s lambda(x, z(r)) dr.
  double cumulative_lambda(int x, double s) const;

  struct Channel {
    int event;
    int y;
    int ky;
    double bound;  // k_y sup tau_k over the simplex-box
  };
  const std::vector<Channel>& channels(int x) const { return channels_[static_cast<std::size_t>(x)]; }
  double channel_bound(int x) const { return bounds_[static_cast<std::size_t>(x)]; }

 private:
  double lambda_integral(int x, double a, double b) const;

  const FlowBundle& flow_;
  double t_;
  const MCharacteristic* mchar_;
  std::vector<std::vector<Channel>> channels_;
  std::vector<double> bounds_;
  std::vector<double> cum_grid_;
  std::vector<std::vector<double>> cum_;
};

// Time-t limit spine: x -> y at rate tau_k(x, z(s)) k_y u(y, s) / u(x, s).
void simulate_limit_spine(const LimitContext& ctx, int x0, Rng& rng, TypePath& out);
TypePath simulate_limit_spine(const LimitContext& ctx, int x0, std::uint64_t seed);

// Homogeneous limit spine with rates sum_k tau_k(x, z(s)) k_y and weight
// exp(int_0^t lambda(Upsilon(s), z(s)) ds).
struct WeightedHomPath {
  TypePath path;
  double log_weight = 0.0;
  double weight() const;
};
void simulate_weighted_hom_limit(const LimitContext& ctx, int x0, Rng& rng, WeightedHomPath& out);
WeightedHomPath simulate_weighted_hom_limit(const LimitContext& ctx, int x0, std::uint64_t seed);

// Finite-K homogeneous spine on {0,1} x X in normalized coordinates. The
// spine coordinates hold exactly one individual.
struct StarPath {
  SpinePathK proj;  // projected counts and spine type

  double spine_mass() const { return 1.0 / proj.K; }
  // (zeta_{0,x}, zeta_{1,x}) at time s: first D entries non-spine, last D spine.
  std::vector<double> star_at(double s) const;
};
Counts floor_composition(const std::vector<double>& z, int K);
StarPath simulate_hom_spine_star(const ModelSpec& model, int K, const std::vector<double>& z0, int x0, double t,
                                 std::uint64_t seed);

struct CouplingOptions {
  bool force_limit_rates = false;  // drive Y^K with tau(x, z(s)) instead of tau(x, zeta)
  bool record_paths = false;
};

struct CouplingResult {
  bool paths_equal = true;
  double sup_deviation = 0.0;
  double first_divergence = std::numeric_limits<double>::quiet_NaN();
  TypePath finite_path;
  TypePath limit_path;
};

// Y^K (rates at zeta^K) and Upsilon (rates at z) driven by shared Poisson
// clocks, one per (x, k, y). `model_K` carries the finite capacity; the
// flow starts at the unrounded z0.
CouplingResult couple_spines(const ModelSpec& model_K, const FlowBundle& flow, int x0, double t, Rng& rng,
                             const CouplingOptions& opt = {});

struct DeviationSummary {
  Estimate sup_deviation;
  Estimate equality;  // frequency of paths_equal
};
DeviationSummary estimate_sup_deviation(const ModelSpec& model, int K, const std::vector<double>& z0, int x0,
                                        double t, std::size_t N, std::uint64_t seed);

// Flow Lipschitz constant bound sum_{x,k} ||k - e_x||_1 (sup tau + Lip tau).
double flow_lipschitz_constant(const ModelSpec& model);
// sup_s ||phi(s, z1) - phi(s, z2)||_1 / ||z1 - z2||_1 (0 when z1 == z2).
double flow_lipschitz_check(const ModelSpec& model, const std::vector<double>& z1, const std::vector<double>& z2,
                            double t);

}  // namespace spinal
