#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace spinal {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Counts = std::vector<int>;

// Hard ceiling on the number of types; keeps per-call scratch on the stack.
inline constexpr int kMaxTypes = 32;

struct TypeSpace {
  std::vector<std::string> names;

  int size() const { return static_cast<int>(names.size()); }
  int index_of(std::string_view name) const;
  bool operator==(const TypeSpace&) const = default;
};

// Polynomial in the D composition coordinates. Terms keyed by exponent
// multi-index; evaluation always happens in normalized coordinates.
class RatePolynomial {
 public:
  RatePolynomial() = default;
  explicit RatePolynomial(int dim) : dim_(dim) {}

  static RatePolynomial constant(int dim, double c);

  // Adds coef to the term with the given exponents (merging duplicates).
  void add_term(const std::vector<int>& powers, double coef);

  double evaluate(const double* z) const;
  double evaluate(const std::vector<double>& z) const { return evaluate(z.data()); }

  int dim() const { return dim_; }
  int max_degree() const;
  bool is_zero() const { return terms_.empty(); }

  // sup over the simplex-box of |p|, bounded by the coefficient l1 norm.
  double sup_bound() const;
  // Lipschitz constant w.r.t. the l1 norm on the simplex-box.
  double lipschitz_bound() const;

  const std::map<std::vector<int>, double>& terms() const { return terms_; }
  bool operator==(const RatePolynomial& o) const { return dim_ == o.dim_ && terms_ == o.terms_; }

 private:
  void rebuild_flat();

  int dim_ = 0;
  std::map<std::vector<int>, double> terms_;
  std::vector<int> flat_powers_;
  std::vector<double> flat_coefs_;
};

struct OffspringEvent {
  int parent = 0;
  Counts offspring;
  RatePolynomial rate;

  int size() const;  // ||k||_1
  bool operator==(const OffspringEvent&) const = default;
};

// Sampling weight psi(x, z). Default: the constant 1.
struct PsiWeight {
  bool constant_one = true;
  std::vector<RatePolynomial> per_type;

  double evaluate(int x, const double* zn) const {
    return constant_one ? 1.0 : per_type[static_cast<std::size_t>(x)].evaluate(zn);
  }
  bool operator==(const PsiWeight&) const = default;
};

enum class GuardMode { Multiplicative, None };

enum class Coordinates { Counts, Normalized };

class ModelSpec {
 public:
  ModelSpec() = default;
  // Validates every invariant; throws ModelError on failure.
  ModelSpec(TypeSpace types, std::vector<OffspringEvent> events, int K, PsiWeight psi = {},
            GuardMode guard = GuardMode::Multiplicative, std::string name = {});

  const TypeSpace& types() const { return types_; }
  int dim() const { return types_.size(); }
  int K() const { return K_; }
  const std::vector<OffspringEvent>& events() const { return events_; }
  const OffspringEvent& event(int e) const { return events_[static_cast<std::size_t>(e)]; }
  int num_events() const { return static_cast<int>(events_.size()); }
  const std::vector<int>& events_of(int x) const { return by_parent_[static_cast<std::size_t>(x)]; }
  const PsiWeight& psi() const { return psi_; }
  GuardMode guard() const { return guard_; }
  const std::string& name() const { return name_; }

  // Same model with another capacity (re-validated).
  ModelSpec with_capacity(int K) const;
  ModelSpec with_psi(PsiWeight psi) const;

  // Event index for (x, k), or -1 when (x, k) is not in J.
  int find_event(int x, const Counts& k) const;

  // tau_k(x, z/K) times the capacity guard, z in integer counts.
  double rate_counts(int e, const int* z) const;
  // tau_k(x, z), z normalized; no guard.
  double rate_normalized(int e, const double* zn) const { return event(e).rate.evaluate(zn); }

  double psi_counts(int x, const int* z) const;
  double psi_normalized(int x, const double* zn) const { return psi_.evaluate(x, zn); }

  // lambda(x, z) = sum_k (||k|| - 1) tau_k(x, z), normalized coordinates.
  double lambda_normalized(int x, const double* zn) const;
  // Same quantity at integer counts with the guard applied.
  double lambda_counts(int x, const int* z) const;

  // True when every event replaces one individual by exactly one.
  bool conservative() const;

  bool operator==(const ModelSpec& o) const {
    return types_ == o.types_ && events_ == o.events_ && K_ == o.K_ && psi_ == o.psi_ &&
           guard_ == o.guard_;
  }

 private:
  void validate();

  TypeSpace types_;
  std::vector<OffspringEvent> events_;
  int K_ = 1;
  PsiWeight psi_;
  GuardMode guard_ = GuardMode::Multiplicative;
  std::string name_;
  std::vector<std::vector<int>> by_parent_;
};

// tau_k(x, z) by type name; zero when (x, k) is absent from J.
double eval_rate(const ModelSpec& model, std::string_view x, const Counts& k,
                 const std::vector<double>& z, Coordinates coords);

// Structured text model files.
ModelSpec parse_model(const std::string& text);
ModelSpec load_model(const std::string& path);
std::string render_model(const ModelSpec& model);

// FNV-1a hash of the rendered model, used to tag reports.
std::uint64_t model_hash(const ModelSpec& model);

// Built-in presets.
ModelSpec preset_toy(double b, double c);
ModelSpec preset_pure_type_change(double alpha, double beta, int K);
ModelSpec preset_constant_switch(double alpha, double beta, int K);
ModelSpec preset_logistic(double b, double d, int K);
ModelSpec preset_yule(double beta, int K);
ModelSpec preset_two_type(double bA, double bB, double d, double mu, int K);
ModelSpec preset_three_type(double b, double d, double c, double mu, int K);

// Preset by name; missing parameters take documented defaults, K <= 0 keeps
// the preset's default capacity.
ModelSpec make_preset(const std::string& name, const std::map<std::string, double>& params, int K = 0);
std::vector<std::string> preset_names();

}  // namespace spinal
