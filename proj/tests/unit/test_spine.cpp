#include <cmath>
#include <map>

#include "doctest.h"
#include "spinal/popsim.hpp"
#include "spinal/spine.hpp"

using namespace spinal;

namespace {

struct Toy {
  ModelSpec model = preset_toy(1.0, 2.0);
  std::shared_ptr<const StateIndex> idx = enumerate_reachable(model, {{0, {1, 0}}});
  GeneratorMatrix G = build_generator(model, idx);
  MTable mtab = solve_m(G, psi_vector(model, *idx), 3.0);
};

}  // namespace

TEST_CASE("toy spine birth rate against the closed form") {
  const Toy toy;
  for (double s : {0.0, 1.0, 2.0, 2.9, 3.0}) {
    const auto table = inhom_spine_rates(toy.model, toy.mtab, s, {0, {1, 0}}, 3.0);
    REQUIRE(table.channels.size() == 1);
    const auto& ch = table.channels.front();
    CHECK(ch.kind == SpineChannel::Kind::Spine);
    CHECK(ch.type == 0);
    CHECK(ch.base == doctest::Approx(2.0));
    CHECK(std::abs(ch.rate - toy_rho_closed_form(1.0, 2.0, 3.0, s)) <= 1e-7);
  }
}

TEST_CASE("spine channel rates are m ratios times generator entries") {
  const auto m = preset_three_type(2, 0.3, 0.5, 0.4, 6);
  const auto idx = enumerate_states(m);
  const auto G = build_generator(m, idx);
  const auto mt = solve_m(G, psi_vector(m, *idx), 2.0);
  for (std::size_t i = 0; i < idx->size(); i += 7) {
    const SpineStateK st{idx->type_of(i), idx->counts_vec(i)};
    for (double s : {0.0, 0.8, 2.0}) {
      const auto table = inhom_spine_rates(m, mt, s, st, 2.0);
      std::map<long, double> agg;
      for (const auto& ch : table.channels) agg[ch.target] += ch.rate;
      const double mi = mt.m_at_index(i, 2.0 - s);
      for (const auto& [j, r] : agg) {
        if (static_cast<std::size_t>(j) == i) continue;
        const double expect = G.entry(i, static_cast<std::size_t>(j)) * mt.m_at_index(static_cast<std::size_t>(j), 2.0 - s) / mi;
        CHECK(r == doctest::Approx(expect).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("spine generator annihilates constants and matches the channel form") {
  const auto m = preset_two_type(2, 1.5, 0.5, 0.5, 8);
  const auto idx = enumerate_states(m);
  const auto G = build_generator(m, idx);
  const auto mt = solve_m(G, psi_vector(m, *idx), 1.5);
  const std::vector<double> one(G.size(), 1.0);
  std::vector<double> f(G.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::sin(1.0 + 0.37 * double(i)) + idx->type_of(i);
  for (double s : {0.0, 0.5, 1.5}) {
    const auto a1 = apply_spine_generator(G, mt, s, 1.5, one);
    for (double v : a1) CHECK(std::abs(v) <= 1e-12);
    const auto af = apply_spine_generator(G, mt, s, 1.5, f);
    for (std::size_t i = 0; i < G.size(); i += 5) {
      const auto table = inhom_spine_rates(m, mt, s, {idx->type_of(i), idx->counts_vec(i)}, 1.5);
      CHECK(af[i] == doctest::Approx(apply_spine_generator_rates(table, i, f)).epsilon(1e-9));
    }
  }
}

TEST_CASE("generator check passes on the toy model") {
  const Toy toy;
  for (double s : {0.0, 1.5}) {
    const auto rep = generator_check(toy.model, toy.G, toy.mtab, s, {0, {2, 0}}, 3.0, 1e-3, 200000, 5);
    CHECK(rep.pass);
    CHECK(rep.rows.size() >= 3);
  }
}

TEST_CASE("inhomogeneous spine paths are consistent") {
  const auto m = preset_three_type(2, 0.3, 0.5, 0.4, 8);
  const auto mt = solve_m(m, 2.0);
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto p = simulate_inhom_spine(m, mt, 1, {2, 2, 1}, 2.0, seed);
    for (std::size_t i = 0; i < p.jumps(); ++i) {
      const int* z = p.counts_at_jump(i);
      CHECK(z[p.types[i]] >= 1);
      int tot = 0;
      for (int x = 0; x < 3; ++x) tot += z[x];
      CHECK(tot <= 8);
      if (i > 0) CHECK(p.times[i] >= p.times[i - 1]);
    }
    CHECK(p.times.back() <= 2.0);
  }
  const auto a = simulate_inhom_spine(m, mt, 1, {2, 2, 1}, 2.0, 3);
  const auto b = simulate_inhom_spine(m, mt, 1, {2, 2, 1}, 2.0, 3);
  CHECK(a.times == b.times);
  CHECK(a.counts == b.counts);
}

TEST_CASE("many-to-one right side for the constant functional is exact") {
  const Toy toy;
  const auto est = many_to_one_rhs(toy.model, toy.mtab, {1, 0}, {Functional::constant_one()}, 3.0, 1000, 1);
  CHECK(est[0].mean == doctest::Approx(toy_m_closed_form(1, 2, 3)[0]).epsilon(1e-8));
  CHECK(est[0].se == 0.0);
}

TEST_CASE("many-to-one identity on a small budget") {
  const Toy toy;
  const std::vector<Functional> Fs = {Functional::final_type(1), Functional::occupation_time(0)};
  const auto lhs = estimate_lineage_sums(toy.model, {1, 0}, 3.0, Fs, 40000, 17);
  const auto rhs = many_to_one_rhs(toy.model, toy.mtab, {1, 0}, Fs, 3.0, 40000, 18);
  for (std::size_t f = 0; f < Fs.size(); ++f)
    CHECK(std::abs(standardized_gap(lhs[f].mean, lhs[f].se, rhs[f].mean, rhs[f].se)) <= 3.0);
}

TEST_CASE("homogeneous spine at finite K") {
  // Yule: lambda = beta on every path, so the log-weight is beta t.
  const auto y = preset_yule(0.7, 200);
  const auto run = simulate_hom_spine_k(y, 0, {5}, 2.0, 9);
  CHECK(run.log_weight == doctest::Approx(0.7 * 2.0).epsilon(1e-12));
  // pure type change: weight one, composition size preserved
  const auto ptc = preset_pure_type_change(1.0, 0.5, 10);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto r = simulate_hom_spine_k(ptc, 1, {4, 3}, 3.0, seed);
    CHECK(r.log_weight == 0.0);
    for (std::size_t i = 0; i < r.path.jumps(); ++i) {
      const int* z = r.path.counts_at_jump(i);
      CHECK(z[0] + z[1] == 7);
      CHECK(z[r.path.types[i]] >= 1);
    }
  }
  CHECK_THROWS_AS(simulate_hom_spine_k(ptc, 0, {0, 3}, 1.0, 1), ModelError);
}
