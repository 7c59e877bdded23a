#include <cmath>

#include "doctest.h"
#include "spinal/lln.hpp"
#include "spinal/msolver.hpp"

using namespace spinal;

namespace {

// Logistic z' = z (b (1 - z) - d) in closed form.
double logistic_z(double b, double d, double z0, double s) {
  const double r = b - d, cap = 1.0 - d / b;
  return cap / (1.0 + (cap / z0 - 1.0) * std::exp(-r * s));
}

template <class F>
double simpson(const F& f, double a, double b, int n = 2000) {
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 ? 4 : 2);
  return acc * h / 3;
}

}  // namespace

TEST_CASE("drift matrix rows sum to the branching intensity") {
  const auto m = preset_three_type(2, 0.3, 0.5, 0.4, 20);
  const double z[] = {0.2, 0.15, 0.1};
  const auto A = drift_matrix(m, z);
  for (int x = 0; x < 3; ++x) {
    double row = 0.0;
    for (int y = 0; y < 3; ++y) row += A[static_cast<std::size_t>(3 * x + y)];
    CHECK(row == doctest::Approx(m.lambda_normalized(x, z)).epsilon(1e-13));
  }
  // pure type change: off-diagonal switching rates
  const auto p = preset_pure_type_change(1.0, 0.5, 10);
  const double w[] = {0.3, 0.6};
  const auto B = drift_matrix(p, w);
  CHECK(B[1] == doctest::Approx(1.0 * (0.5 + 0.3)));
  CHECK(B[0] == doctest::Approx(-B[1]));
  CHECK(B[2] == doctest::Approx(0.5 * (0.5 + 0.6)));
}

TEST_CASE("logistic flow and characteristic against closed forms") {
  const double b = 2.0, d = 1.0, z0 = 0.1, t = 4.0;
  const auto m = preset_logistic(b, d, 100);
  const FlowBundle flow(m, {z0}, t);
  for (double s : {0.0, 0.3, 1.0, 2.5, 4.0}) CHECK(std::abs(flow.z_at(s)[0] - logistic_z(b, d, z0, s)) <= 1e-8);
  CHECK(flow.residual() <= 1e-6);
  const MCharacteristic mc(flow, t);
  for (double s : {0.0, 1.0, 3.0, 4.0}) {
    const double integral = simpson([&](double r) { return b * (1 - logistic_z(b, d, z0, r)) - d; }, s, t);
    CHECK(mc.u(0, s) == doctest::Approx(std::exp(integral)).epsilon(1e-8));
  }
  CHECK(mc.residual() <= 1e-6);
  const LimitContext ctx(flow, t, &mc);
  const double integral = simpson([&](double r) { return b * (1 - logistic_z(b, d, z0, r)) - d; }, 0.0, 2.0);
  CHECK(ctx.cumulative_lambda(0, 2.0) == doctest::Approx(integral).epsilon(1e-10));
}

TEST_CASE("finite-K m approaches the characteristic solution") {
  const auto base = preset_logistic(2.0, 1.0, 100);
  const double z0 = 0.25, t = 1.5;
  const FlowBundle flow(base, {z0}, t);
  const MCharacteristic mc(flow, t);
  double prev = INFINITY;
  for (int K : {40, 160, 640}) {
    const auto m = base.with_capacity(K);
    const auto mt = solve_m(m, t);
    const double err = std::abs(mt.m_at(0, {static_cast<int>(z0 * K)}, t) - mc.u(0, 0.0));
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev <= 1e-2);
}

TEST_CASE("flow errors") {
  const auto m = preset_two_type(2, 1.5, 0.5, 0.5, 100);
  CHECK_THROWS_AS(FlowBundle(m, {0.8, 0.5}, 1.0), ModelError);
  CHECK_THROWS_AS(FlowBundle(m, {0.5}, 1.0), ModelError);
  const FlowBundle f(m, {0.3, 0.2}, 1.0);
  CHECK_THROWS_AS(MCharacteristic(f, 2.0), ModelError);
}

TEST_CASE("flow Lipschitz bound") {
  const auto m = preset_two_type(2, 1.5, 0.5, 0.5, 100);
  const double L = flow_lipschitz_constant(m);
  CHECK(L > 0.0);
  for (double t : {0.5, 1.0, 2.0}) {
    const double ratio = flow_lipschitz_check(m, {0.3, 0.2}, {0.31, 0.18}, t);
    CHECK(ratio <= std::exp(L * t));
    CHECK(ratio > 0.0);
  }
  CHECK(flow_lipschitz_check(m, {0.3, 0.2}, {0.3, 0.2}, 1.0) == 0.0);
}

TEST_CASE("Yule limit spine") {
  const double beta = 0.8, t = 2.0;
  const auto m = preset_yule(beta, 1000);
  const FlowBundle flow(m, {0.01}, t);
  const MCharacteristic mc(flow, t);
  CHECK(mc.u(0, 0.0) == doctest::Approx(std::exp(beta * t)).epsilon(1e-9));
  const LimitContext ctx(flow, t, &mc);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto w = simulate_weighted_hom_limit(ctx, 0, seed);
    CHECK(w.weight() == doctest::Approx(std::exp(beta * t)).epsilon(1e-10));
    CHECK(w.path.changes() == 0);
    CHECK(simulate_limit_spine(ctx, 0, seed).changes() == 0);
  }
}

TEST_CASE("Feynman-Kac and link identities on a small budget") {
  const auto m = preset_two_type(2, 1.5, 0.5, 0.5, 100);
  const double t = 1.5;
  const FlowBundle flow(m, {0.3, 0.2}, t);
  const MCharacteristic mc(flow, t);
  const LimitContext ctx(flow, t, &mc);
  const std::size_t N = 40000;
  std::vector<double> w(N), lhs(N), rhs(N);
  const auto F = Functional::final_type(1);
  const FlowTrack track(flow);
  for (std::size_t i = 0; i < N; ++i) {
    Rng r1(7, streams::kWeighted, i), r2(7, streams::kLimitSpine, i);
    WeightedHomPath hp;
    simulate_weighted_hom_limit(ctx, 0, r1, hp);
    TypePath ip;
    simulate_limit_spine(ctx, 0, r2, ip);
    w[i] = hp.weight();
    lhs[i] = hp.weight() * F.evaluate(hp.path, &track);
    rhs[i] = mc.u(0, 0.0) * F.evaluate(ip, &track);
  }
  const auto ew = summarize(w);
  CHECK(std::abs(ew.mean - mc.u(0, 0.0)) <= 3 * ew.se);
  const auto a = summarize(lhs), b = summarize(rhs);
  CHECK(std::abs(standardized_gap(a.mean, a.se, b.mean, b.se)) <= 3.0);
}

TEST_CASE("star representation") {
  const auto m = preset_two_type(2, 1.5, 0.5, 0.5, 100);
  const auto sp = simulate_hom_spine_star(m, 200, {0.3, 0.2}, 0, 1.0, 5);
  CHECK(sp.spine_mass() == doctest::Approx(1.0 / 200));
  for (double s : {0.0, 0.5, 1.0}) {
    const auto star = sp.star_at(s);
    const auto st = sp.proj.state_at(s);
    double spine = 0.0;
    for (int x = 0; x < 2; ++x) {
      CHECK(star[static_cast<std::size_t>(x)] + star[static_cast<std::size_t>(2 + x)] ==
            doctest::Approx(st.counts[static_cast<std::size_t>(x)] / 200.0));
      spine += star[static_cast<std::size_t>(2 + x)];
    }
    CHECK(spine == doctest::Approx(1.0 / 200));
    CHECK(star[static_cast<std::size_t>(2 + st.type)] > 0.0);
  }
  CHECK(floor_composition({0.3, 0.2}, 10) == Counts{3, 2});
  CHECK_THROWS_AS(simulate_hom_spine_star(m, 3, {0.3, 0.2}, 1, 1.0, 1), ModelError);
}

TEST_CASE("coupling") {
  const auto base = preset_three_type(2, 0.3, 0.5, 0.4, 20);
  const std::vector<double> z0 = {0.2, 0.15, 0.1};
  const FlowBundle flow(base, z0, 1.0);
  const auto mk = base.with_capacity(400);
  CouplingOptions force;
  force.force_limit_rates = true;
  force.record_paths = true;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    Rng rng(seed);
    const auto r = couple_spines(mk, flow, 0, 1.0, rng, force);
    CHECK(r.paths_equal);
    CHECK(r.finite_path.types == r.limit_path.types);
    CHECK(r.finite_path.times == r.limit_path.times);
  }
  // at t = 0 the deviation is the rounding of the initial composition
  for (int K : {7, 33, 400}) {
    const FlowBundle f0(base, z0, 0.0);
    Rng rng(1);
    const auto r = couple_spines(base.with_capacity(K), f0, 0, 0.0, rng);
    const auto c = floor_composition(z0, K);
    double dev = 0.0;
    for (std::size_t i = 0; i < 3; ++i) dev += std::abs(c[i] / double(K) - z0[i]);
    CHECK(r.sup_deviation == dev);
    CHECK(r.sup_deviation <= 3.0 / K);
  }
  const auto small = estimate_sup_deviation(base, 100, z0, 0, 1.0, 100, 3);
  const auto large = estimate_sup_deviation(base, 1600, z0, 0, 1.0, 100, 3);
  CHECK(large.sup_deviation.mean < small.sup_deviation.mean);
  CHECK(large.equality.mean >= 0.0);
}
