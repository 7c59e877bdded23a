#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <vector>

#include "spinal/model.hpp"
#include "spinal/state_index.hpp"

namespace spinal {

// CSR matrix of the generator acting on functions of (spine type, composition).
struct GeneratorMatrix {
  std::shared_ptr<const StateIndex> index;
  std::vector<int> row_ptr;
  std::vector<int> cols;
  std::vector<double> vals;

  std::size_t size() const { return row_ptr.empty() ? 0 : row_ptr.size() - 1; }
  void multiply(const double* x, double* y) const;
  double entry(std::size_t i, std::size_t j) const;
  std::vector<double> dense() const;  // row-major
};

GeneratorMatrix build_generator(const ModelSpec& model, std::shared_ptr<const StateIndex> index);

// psi evaluated on every indexed state.
std::vector<double> psi_vector(const ModelSpec& model, const StateIndex& index);

struct MSolveOptions {
  double tol = 1e-10;
  double max_step_fraction = 1e-2;  // grid step cap as a fraction of T
};

// m(., tau) = exp(G tau) psi on a time grid, with log-space cubic Hermite
// interpolation (uses the stored derivative G m).
class MTable {
 public:
  MTable() = default;
  MTable(std::shared_ptr<const StateIndex> index, std::vector<double> grid, std::vector<double> values,
         std::vector<double> derivs);

  const StateIndex& index() const { return *index_; }
  std::shared_ptr<const StateIndex> index_ptr() const { return index_; }
  std::size_t states() const { return n_; }
  double horizon() const { return grid_.back(); }
  const std::vector<double>& grid() const { return grid_; }
  const double* values_at(std::size_t j) const { return values_.data() + j * n_; }
  double value(std::size_t j, std::size_t i) const { return values_[j * n_ + i]; }
  const double* psi() const { return values_at(0); }

  // Grid cell j with grid[j] <= t <= grid[j+1]; throws outside [0, T].
  std::size_t cell(double t) const;
  double m_at_index(std::size_t i, double t) const { return m_in_cell(i, cell(t), t); }
  double m_in_cell(std::size_t i, std::size_t j, double t) const;
  double m_at(int x, const Counts& z, double t) const;

  void write(std::ostream& out) const;

 private:
  std::shared_ptr<const StateIndex> index_;
  std::size_t n_ = 0;
  std::vector<double> grid_;
  std::vector<double> values_;
  std::vector<double> logv_;
  std::vector<double> dlog_;
};

MTable solve_m(const GeneratorMatrix& G, const std::vector<double>& psi, double T, const MSolveOptions& opt = {});

// Convenience: full state space, psi from the model.
MTable solve_m(const ModelSpec& model, double T, const MSolveOptions& opt = {});

// exp(G T) psi by dense scaling and squaring; n must not exceed 512.
std::vector<double> dense_m(const GeneratorMatrix& G, const std::vector<double>& psi, double T);

// Closed forms for the two-type toy model with psi = 1, on the ordered states
// (A,1,0), (A,2,0), (A,1,1), (B,1,1).
struct ToyClosedForm {
  double b, c, delta, sqrt_delta, lambda_plus, lambda_minus;
  ToyClosedForm(double b, double c);
  std::array<double, 4> m(double t) const;
  double rho(double t, double s) const;
};

std::array<double, 4> toy_m_closed_form(double b, double c, double t);
double toy_rho_closed_form(double b, double c, double t, double s);

}  // namespace spinal
