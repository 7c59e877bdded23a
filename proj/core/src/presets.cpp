#include <cmath>

#include "spinal/model.hpp"

namespace spinal {

namespace {

RatePolynomial poly(int dim, std::initializer_list<std::pair<std::vector<int>, double>> terms) {
  RatePolynomial p(dim);
  for (const auto& [pw, c] : terms) p.add_term(pw, c);
  return p;
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ModelError(std::string("preset parameter ") + what + " must be positive");
}

void require_nonnegative(double v, const char* what) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw ModelError(std::string("preset parameter ") + what + " must be nonnegative");
}

double param(const std::map<std::string, double>& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

}  // namespace

ModelSpec preset_toy(double b, double c) {
  require_positive(b, "b");
  require_positive(c, "c");
  // (2 z_A - 1)^2 vanishes at z_A = 1/2, so the death and type-change
  // events only fire in the state where two A individuals coexist.
  std::vector<OffspringEvent> ev;
  ev.push_back({0, {2, 0}, RatePolynomial::constant(2, b)});
  ev.push_back({0, {0, 0}, poly(2, {{{2, 0}, 4 * b}, {{1, 0}, -4 * b}, {{0, 0}, b}})});
  ev.push_back({0, {0, 1}, poly(2, {{{2, 0}, 4 * c}, {{1, 0}, -4 * c}, {{0, 0}, c}})});
  ev.push_back({1, {1, 0}, poly(2, {{{1, 0}, 2 * c}})});
  return ModelSpec(TypeSpace{{"A", "B"}}, std::move(ev), 2, {}, GuardMode::Multiplicative, "toy");
}

ModelSpec preset_pure_type_change(double alpha, double beta, int K) {
  require_positive(alpha, "alpha");
  require_positive(beta, "beta");
  std::vector<OffspringEvent> ev;
  ev.push_back({0, {0, 1}, poly(2, {{{0, 0}, 0.5 * alpha}, {{1, 0}, alpha}})});
  ev.push_back({1, {1, 0}, poly(2, {{{0, 0}, 0.5 * beta}, {{0, 1}, beta}})});
  return ModelSpec(TypeSpace{{"A", "B"}}, std::move(ev), K, {}, GuardMode::Multiplicative, "pure-type-change");
}

ModelSpec preset_constant_switch(double alpha, double beta, int K) {
  require_positive(alpha, "alpha");
  require_positive(beta, "beta");
  std::vector<OffspringEvent> ev;
  ev.push_back({0, {0, 1}, RatePolynomial::constant(2, alpha)});
  ev.push_back({1, {1, 0}, RatePolynomial::constant(2, beta)});
  return ModelSpec(TypeSpace{{"A", "B"}}, std::move(ev), K, {}, GuardMode::Multiplicative, "constant-switch");
}

ModelSpec preset_logistic(double b, double d, int K) {
  require_positive(b, "b");
  require_nonnegative(d, "d");
  std::vector<OffspringEvent> ev;
  ev.push_back({0, {2}, poly(1, {{{0}, b}, {{1}, -b}})});
  if (d > 0) ev.push_back({0, {0}, RatePolynomial::constant(1, d)});
  return ModelSpec(TypeSpace{{"A"}}, std::move(ev), K, {}, GuardMode::Multiplicative, "logistic");
}

ModelSpec preset_yule(double beta, int K) {
  require_positive(beta, "beta");
  std::vector<OffspringEvent> ev;
  ev.push_back({0, {2}, RatePolynomial::constant(1, beta)});
  return ModelSpec(TypeSpace{{"A"}}, std::move(ev), K, {}, GuardMode::Multiplicative, "yule");
}

ModelSpec preset_two_type(double bA, double bB, double d, double mu, int K) {
  require_positive(bA, "bA");
  require_positive(bB, "bB");
  require_nonnegative(d, "d");
  require_positive(mu, "mu");
  std::vector<OffspringEvent> ev;
  ev.push_back({0, {2, 0}, poly(2, {{{0, 0}, bA}, {{1, 0}, -bA}, {{0, 1}, -bA}})});
  ev.push_back({0, {0, 1}, RatePolynomial::constant(2, mu)});
  if (d > 0) ev.push_back({0, {0, 0}, RatePolynomial::constant(2, d)});
  ev.push_back({1, {0, 2}, poly(2, {{{0, 0}, bB}, {{1, 0}, -bB}, {{0, 1}, -bB}})});
  ev.push_back({1, {1, 0}, RatePolynomial::constant(2, mu)});
  if (d > 0) ev.push_back({1, {0, 0}, RatePolynomial::constant(2, d)});
  return ModelSpec(TypeSpace{{"A", "B"}}, std::move(ev), K, {}, GuardMode::Multiplicative, "two-type");
}

ModelSpec preset_three_type(double b, double d, double c, double mu, int K) {
  require_positive(b, "b");
  require_nonnegative(d, "d");
  require_nonnegative(c, "c");
  require_positive(mu, "mu");
  std::vector<OffspringEvent> ev;
  for (int x = 0; x < 3; ++x) {
    const int next = (x + 1) % 3;
    auto crowd = [&](double coef) {
      RatePolynomial p(3);
      p.add_term({0, 0, 0}, coef);
      p.add_term({1, 0, 0}, -coef);
      p.add_term({0, 1, 0}, -coef);
      p.add_term({0, 0, 1}, -coef);
      return p;
    };
    Counts twin(3, 0), mutant(3, 0), none(3, 0);
    twin[static_cast<std::size_t>(x)] = 2;
    mutant[static_cast<std::size_t>(x)] = 1;
    mutant[static_cast<std::size_t>(next)] = 1;
    ev.push_back({x, twin, crowd(b)});
    ev.push_back({x, mutant, crowd(mu)});
    RatePolynomial death = RatePolynomial::constant(3, d);
    std::vector<int> pw(3, 0);
    pw[static_cast<std::size_t>(x)] = 1;
    if (c > 0) death.add_term(pw, c);
    if (!death.is_zero()) ev.push_back({x, none, death});
  }
  return ModelSpec(TypeSpace{{"A", "B", "C"}}, std::move(ev), K, {}, GuardMode::Multiplicative, "three-type");
}

std::vector<std::string> preset_names() {
  return {"toy", "pure-type-change", "constant-switch", "logistic", "yule", "two-type", "three-type"};
}

ModelSpec make_preset(const std::string& name, const std::map<std::string, double>& p, int K) {
  auto cap = [&](int fallback) { return K > 0 ? K : fallback; };
  if (name == "toy") {
    ModelSpec m = preset_toy(param(p, "b", 1.0), param(p, "c", 2.0));
    return K > 0 && K != 2 ? m.with_capacity(K) : m;
  }
  if (name == "pure-type-change")
    return preset_pure_type_change(param(p, "alpha", 1.0), param(p, "beta", 0.5), cap(10));
  if (name == "constant-switch")
    return preset_constant_switch(param(p, "alpha", 1.0), param(p, "beta", 0.5), cap(10));
  if (name == "logistic") return preset_logistic(param(p, "b", 2.0), param(p, "d", 1.0), cap(100));
  if (name == "yule") return preset_yule(param(p, "beta", 1.0), cap(1000));
  if (name == "two-type")
    return preset_two_type(param(p, "bA", 2.0), param(p, "bB", 1.5), param(p, "d", 0.5), param(p, "mu", 0.5),
                           cap(100));
  if (name == "three-type")
    return preset_three_type(param(p, "b", 2.0), param(p, "d", 0.3), param(p, "c", 0.5), param(p, "mu", 0.4),
                             cap(20));
  throw ModelError("unknown preset '" + name + "'");
}

}  // namespace spinal
