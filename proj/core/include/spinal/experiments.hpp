#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "spinal/functional.hpp"
#include "spinal/lln.hpp"
#include "spinal/model.hpp"
#include "spinal/msolver.hpp"
#include "spinal/stats.hpp"

namespace spinal {

struct ReportRow {
  std::string label;
  double estimate = 0.0;
  double se = 0.0;
  double reference = 0.0;
  double reference_se = 0.0;
  double gap = 0.0;  // standardized gap, or the checked quantity for shape rows
  bool pass = true;
};

struct ExperimentReport {
  std::string id;
  std::vector<std::pair<std::string, std::string>> inputs;
  std::vector<ReportRow> rows;
  bool pass = true;
  double wall_seconds = 0.0;

  void add_input(const std::string& key, const std::string& value) { inputs.emplace_back(key, value); }
  void add_row(ReportRow row);
  // One-line JSON metadata comment followed by a CSV table of the rows.
  void write_csv(std::ostream& out) const;
  std::string metadata_json() const;
  // Human-readable multi-line summary.
  std::string summary() const;
};

// Identity row: passes when |estimate - reference| <= tol combined SEs.
ReportRow identity_row(std::string label, const Estimate& lhs, const Estimate& rhs, double tol);

// Both sides of the finite-K many-to-one identity for every functional.
// Constant-1 functionals get an extra row against the exact sum of z_x m.
ExperimentReport run_many_to_one(const ModelSpec& model, const Counts& z0, double t, const std::vector<Functional>& Fs,
                                 std::size_t N, std::uint64_t seed, double tol = 3.0);

// Monte-Carlo m against the ODE solution on the given probes (x, z, t).
struct MProbe {
  int x = 0;
  Counts z;
  double t = 0.0;
};
ExperimentReport run_m_oracle(const ModelSpec& model, const std::vector<MProbe>& probes, std::size_t N,
                              std::uint64_t seed, double tol = 3.0);

// Mean Feynman-Kac weight of the homogeneous limit spine against u(x0, 0).
ExperimentReport run_feynman_kac(const ModelSpec& model, const std::vector<double>& z0, int x0, double t,
                                 std::size_t N, std::uint64_t seed, double tol = 3.0);

// E[W F(hom. spine)] against u(x0, 0) E[F(time-t limit spine)].
ExperimentReport run_link_identity(const ModelSpec& model, const std::vector<double>& z0, int x0, double t,
                                   const std::vector<Functional>& Fs, std::size_t N, std::uint64_t seed,
                                   double tol = 3.0);

struct LlnOptions {
  std::size_t N_limit = 200000;     // limit-spine paths per start type
  std::size_t N_coupling = 2000;    // coupled pairs per K
  double slack = 2.0;               // SE slack of the shape checks
};

// Finite-K (1/K) E[sum_u F] against sum_x z_x u(x, 0) E[F(Upsilon)] over a
// ladder of capacities, with the K^(-1/4) envelope and coupling checks.
ExperimentReport run_lln_convergence(const ModelSpec& model, const std::vector<double>& z0, double t,
                                     const Functional& F, const std::vector<int>& Kladder, std::size_t N,
                                     std::uint64_t seed, const LlnOptions& opt = {});

// E[sup ||zeta^K - z||_1] and coupling equality frequency over a ladder.
struct ScalingOptions {
  double slope_low = -0.65;
  double slope_high = -0.35;
  double slack = 2.0;
};
ExperimentReport run_scaling_suite(const ModelSpec& model, const std::vector<double>& z0, int x0, double t,
                                   const std::vector<int>& Kladder, std::size_t N, std::uint64_t seed,
                                   const ScalingOptions& opt = {});

// Line plot of the spine channel rates at a fixed state over s in [0, t].
void write_rate_svg(std::ostream& out, const ModelSpec& model, const MTable& mtab, int x, const Counts& z, double t,
                    std::size_t samples = 200);

}  // namespace spinal
