#include "spinal/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <set>

#include "spinal/lattice.hpp"

namespace spinal {

std::uint64_t count_compositions(int D, int K) {
  // binomial(K + D, D) computed incrementally; each partial product is exact.
  unsigned __int128 r = 1;
  for (int i = 1; i <= D; ++i) {
    r = r * static_cast<unsigned>(K + i) / static_cast<unsigned>(i);
    if (r > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(r);
}

int TypeSpace::index_of(std::string_view name) const {
  for (int i = 0; i < size(); ++i)
    if (names[static_cast<std::size_t>(i)] == name) return i;
  throw ModelError("unknown type '" + std::string(name) + "'");
}

RatePolynomial RatePolynomial::constant(int dim, double c) {
  RatePolynomial p(dim);
  p.add_term(std::vector<int>(static_cast<std::size_t>(dim), 0), c);
  return p;
}

void RatePolynomial::add_term(const std::vector<int>& powers, double coef) {
  if (static_cast<int>(powers.size()) != dim_)
    throw ModelError("monomial has " + std::to_string(powers.size()) + " exponents, expected " +
                     std::to_string(dim_));
  for (int p : powers)
    if (p < 0) throw ModelError("negative exponent in monomial");
  auto [it, inserted] = terms_.emplace(powers, coef);
  if (!inserted) it->second += coef;
  if (it->second == 0.0) terms_.erase(it);
  rebuild_flat();
}

void RatePolynomial::rebuild_flat() {
  flat_powers_.clear();
  flat_coefs_.clear();
  for (const auto& [pw, c] : terms_) {
    flat_powers_.insert(flat_powers_.end(), pw.begin(), pw.end());
    flat_coefs_.push_back(c);
  }
}

double RatePolynomial::evaluate(const double* z) const {
  double sum = 0.0;
  const int* pw = flat_powers_.data();
  for (double c : flat_coefs_) {
    double term = c;
    for (int i = 0; i < dim_; ++i)
      for (int e = 0; e < pw[i]; ++e) term *= z[i];
    sum += term;
    pw += dim_;
  }
  return sum;
}

int RatePolynomial::max_degree() const {
  int deg = 0;
  for (const auto& [pw, c] : terms_) {
    int d = 0;
    for (int p : pw) d += p;
    deg = std::max(deg, d);
  }
  return deg;
}

double RatePolynomial::sup_bound() const {
  double s = 0.0;
  for (const auto& [pw, c] : terms_) s += std::abs(c);
  return s;
}

double RatePolynomial::lipschitz_bound() const {
  double s = 0.0;
  for (const auto& [pw, c] : terms_) {
    int d = 0;
    for (int p : pw) d += p;
    s += std::abs(c) * d;
  }
  return s;
}

int OffspringEvent::size() const {
  int s = 0;
  for (int k : offspring) s += k;
  return s;
}

ModelSpec::ModelSpec(TypeSpace types, std::vector<OffspringEvent> events, int K, PsiWeight psi,
                     GuardMode guard, std::string name)
    : types_(std::move(types)),
      events_(std::move(events)),
      K_(K),
      psi_(std::move(psi)),
      guard_(guard),
      name_(std::move(name)) {
  validate();
}

ModelSpec ModelSpec::with_capacity(int K) const {
  return ModelSpec(types_, events_, K, psi_, guard_, name_);
}

ModelSpec ModelSpec::with_psi(PsiWeight psi) const {
  return ModelSpec(types_, events_, K_, std::move(psi), guard_, name_);
}

namespace {

// Points of the simplex-box used to check signs numerically.
template <class Fn>
void for_each_check_point(int D, int K, Fn&& fn) {
  constexpr std::uint64_t kBudget = 200000;
  int G = 1;
  while (G < 40 && count_compositions(D, G + 1) <= kBudget) ++G;
  std::vector<double> zn(static_cast<std::size_t>(D));
  auto visit = [&](int scale) {
    for_each_composition(D, scale, [&](const std::vector<int>& z) {
      for (int i = 0; i < D; ++i) zn[static_cast<std::size_t>(i)] = double(z[static_cast<std::size_t>(i)]) / scale;
      fn(zn);
    });
  };
  visit(G);
  if (K != G && count_compositions(D, K) <= kBudget) visit(K);
}

}  // namespace

void ModelSpec::validate() {
  const int D = types_.size();
  if (D < 1) throw ModelError("type space must contain at least one type");
  if (D > kMaxTypes) throw ModelError("type space too large (max " + std::to_string(kMaxTypes) + ")");
  std::set<std::string> seen;
  for (const auto& n : types_.names) {
    if (n.empty()) throw ModelError("type names must be nonempty");
    if (!seen.insert(n).second) throw ModelError("duplicate type name '" + n + "'");
  }
  if (K_ < 1) throw ModelError("capacity K must be a positive integer");

  std::set<std::pair<int, Counts>> keys;
  for (const auto& ev : events_) {
    if (ev.parent < 0 || ev.parent >= D) throw ModelError("event parent out of range");
    if (static_cast<int>(ev.offspring.size()) != D)
      throw ModelError("offspring vector has wrong dimension");
    for (int k : ev.offspring)
      if (k < 0) throw ModelError("offspring counts must be nonnegative");
    if (ev.rate.dim() != D) throw ModelError("rate polynomial has wrong dimension");
    if (!keys.insert({ev.parent, ev.offspring}).second)
      throw ModelError("duplicate event for parent '" + types_.names[static_cast<std::size_t>(ev.parent)] + "'");
  }

  by_parent_.assign(static_cast<std::size_t>(D), {});
  for (int e = 0; e < num_events(); ++e) by_parent_[static_cast<std::size_t>(events_[static_cast<std::size_t>(e)].parent)].push_back(e);

  for_each_check_point(D, K_, [&](const std::vector<double>& zn) {
    for (const auto& ev : events_) {
      const double v = ev.rate.evaluate(zn.data());
      if (v < -1e-12 * std::max(1.0, ev.rate.sup_bound()))
        throw ModelError("negative rate for parent '" + types_.names[static_cast<std::size_t>(ev.parent)] + "'");
    }
  });

  if (!psi_.constant_one) {
    if (static_cast<int>(psi_.per_type.size()) != D) throw ModelError("psi needs one polynomial per type");
    for (const auto& p : psi_.per_type)
      if (p.dim() != D) throw ModelError("psi polynomial has wrong dimension");
    for_each_check_point(D, K_, [&](const std::vector<double>& zn) {
      for (int x = 0; x < D; ++x) {
        if (zn[static_cast<std::size_t>(x)] <= 0.0) continue;
        if (!(psi_.per_type[static_cast<std::size_t>(x)].evaluate(zn.data()) > 0.0))
          throw ModelError("psi must be positive where the population has mass");
      }
    });
  }

  if (guard_ == GuardMode::None) {
    if (count_compositions(D, K_) > 500000)
      throw ModelError("capacity guard violated: cannot verify unguarded rates at this K; use guard: multiplicative");
    std::array<double, kMaxTypes> zn{};
    for_each_composition(D, K_, [&](const std::vector<int>& z) {
      int total = 0;
      for (int v : z) total += v;
      for (int i = 0; i < D; ++i) zn[static_cast<std::size_t>(i)] = double(z[static_cast<std::size_t>(i)]) / K_;
      for (const auto& ev : events_) {
        if (z[static_cast<std::size_t>(ev.parent)] < 1) continue;
        if (total + ev.size() - 1 <= K_) continue;
        if (std::abs(ev.rate.evaluate(zn.data())) > 1e-12)
          throw ModelError("capacity guard violated for parent '" + types_.names[static_cast<std::size_t>(ev.parent)] + "'");
      }
    });
  }
}

int ModelSpec::find_event(int x, const Counts& k) const {
  if (x < 0 || x >= dim()) return -1;
  for (int e : events_of(x))
    if (events_[static_cast<std::size_t>(e)].offspring == k) return e;
  return -1;
}

double ModelSpec::rate_counts(int e, const int* z) const {
  const auto& ev = event(e);
  const int D = dim();
  std::array<double, kMaxTypes> zn;
  int total = 0;
  for (int i = 0; i < D; ++i) {
    total += z[i];
    zn[static_cast<std::size_t>(i)] = double(z[i]) / K_;
  }
  if (guard_ == GuardMode::Multiplicative && total + ev.size() - 1 > K_) return 0.0;
  return ev.rate.evaluate(zn.data());
}

double ModelSpec::psi_counts(int x, const int* z) const {
  if (psi_.constant_one) return 1.0;
  std::array<double, kMaxTypes> zn;
  for (int i = 0; i < dim(); ++i) zn[static_cast<std::size_t>(i)] = double(z[i]) / K_;
  return psi_.evaluate(x, zn.data());
}

double ModelSpec::lambda_normalized(int x, const double* zn) const {
  double s = 0.0;
  for (int e : events_of(x)) s += (event(e).size() - 1) * rate_normalized(e, zn);
  return s;
}

double ModelSpec::lambda_counts(int x, const int* z) const {
  double s = 0.0;
  for (int e : events_of(x)) s += (event(e).size() - 1) * rate_counts(e, z);
  return s;
}

bool ModelSpec::conservative() const {
  return std::all_of(events_.begin(), events_.end(), [](const OffspringEvent& ev) { return ev.size() == 1; });
}

double eval_rate(const ModelSpec& model, std::string_view x, const Counts& k, const std::vector<double>& z,
                 Coordinates coords) {
  const int xi = model.types().index_of(x);
  if (static_cast<int>(k.size()) != model.dim() || static_cast<int>(z.size()) != model.dim())
    throw ModelError("dimension mismatch: expected vectors of length " + std::to_string(model.dim()));
  const int e = model.find_event(xi, k);
  if (e < 0) return 0.0;
  if (coords == Coordinates::Normalized) return model.rate_normalized(e, z.data());
  std::array<int, kMaxTypes> zc{};
  for (int i = 0; i < model.dim(); ++i) {
    const double v = z[static_cast<std::size_t>(i)];
    if (v < 0 || v != std::floor(v)) throw ModelError("count coordinates must be nonnegative integers");
    zc[static_cast<std::size_t>(i)] = static_cast<int>(v);
  }
  return model.rate_counts(e, zc.data());
}

}  // namespace spinal
