#include <functional>
#include <set>
#include <string>

#include "doctest.h"
#include "spinal/lattice.hpp"
#include "spinal/model.hpp"
#include "spinal/state_index.hpp"

using namespace spinal;

namespace {

const char* kHeader = "# spinal-model v1\n";

std::string one_event_model(const std::string& offspring, const std::string& rate, int K,
                            const std::string& guard = "multiplicative") {
  return std::string(kHeader) + "types: [A, B]\nK: " + std::to_string(K) + "\nguard: " + guard +
         "\nevents:\n  - parent: A\n    offspring: " + offspring + "\n    rate: " + rate + "\n";
}

bool throws_with(const std::function<void()>& fn, const std::string& needle) {
  try {
    fn();
  } catch (const ModelError& e) {
    return std::string(e.what()).find(needle) != std::string::npos;
  }
  return false;
}

// Brute-force list of (x, z) with z_x >= 1 and ||z||_1 <= K.
std::set<std::pair<int, Counts>> brute_states(int D, int K) {
  std::set<std::pair<int, Counts>> out;
  Counts z(static_cast<std::size_t>(D), 0);
  std::function<void(int)> rec = [&](int i) {
    if (i == D) {
      int s = 0;
      for (int v : z) s += v;
      if (s > K) return;
      for (int x = 0; x < D; ++x)
        if (z[static_cast<std::size_t>(x)] >= 1) out.insert({x, z});
      return;
    }
    for (int v = 0; v <= K; ++v) {
      z[static_cast<std::size_t>(i)] = v;
      rec(i + 1);
    }
    z[static_cast<std::size_t>(i)] = 0;
  };
  rec(0);
  return out;
}

}  // namespace

TEST_CASE("toy preset rates") {
  const auto m = preset_toy(1.0, 2.0);
  CHECK(m.dim() == 2);
  CHECK(m.K() == 2);
  CHECK(m.num_events() == 4);
  CHECK(eval_rate(m, "A", {2, 0}, {1, 0}, Coordinates::Counts) == doctest::Approx(1.0));
  CHECK(eval_rate(m, "B", {1, 0}, {1, 1}, Coordinates::Counts) == doctest::Approx(2.0));
  CHECK(eval_rate(m, "A", {0, 1}, {2, 0}, Coordinates::Counts) == doctest::Approx(2.0));
  CHECK(eval_rate(m, "A", {0, 0}, {2, 0}, Coordinates::Counts) == doctest::Approx(1.0));
  // capacity forbids growth from a full population
  for (double b : {0.5, 1.0, 3.0})
    CHECK(eval_rate(preset_toy(b, 1.0), "A", {2, 0}, {2, 0}, Coordinates::Counts) == 0.0);
  CHECK(eval_rate(m, "B", {0, 1}, {1, 1}, Coordinates::Counts) == 0.0);
  CHECK_THROWS_AS(preset_toy(0.0, 1.0), ModelError);
  CHECK_THROWS_AS(preset_toy(1.0, -2.0), ModelError);
}

TEST_CASE("eval_rate errors and polynomial arithmetic") {
  const auto m = preset_toy(1.0, 2.0);
  CHECK(throws_with([&] { eval_rate(m, "C", {1, 0}, {1, 0}, Coordinates::Counts); }, "unknown type"));
  CHECK(throws_with([&] { eval_rate(m, "A", {1, 0, 0}, {1, 0}, Coordinates::Counts); }, "dimension mismatch"));

  const std::string text = std::string(kHeader) +
                           "types: [A, B]\nK: 4\nevents:\n"
                           "  - parent: A\n    offspring: [2, 0]\n    rate:\n"
                           "      - {monomial: [1, 0], coef: 1}\n"
                           "      - {monomial: [2, 0], coef: -1}\n"
                           "      - {monomial: [1, 1], coef: -1}\n";
  const auto lg = parse_model(text);
  CHECK(eval_rate(lg, "A", {2, 0}, {0.5, 0.25}, Coordinates::Normalized) == 0.125);
}

TEST_CASE("parse the toy model file and match the preset") {
  const auto file = load_model(std::string(SPINAL_MODELS_DIR) + "/toy.yaml");
  CHECK(file.dim() == 2);
  CHECK(file.num_events() == 4);
  CHECK(file == preset_toy(1.0, 2.0));
  const auto pre = load_model(std::string(SPINAL_MODELS_DIR) + "/toy-preset.yaml");
  CHECK(pre == file);
  const auto three = load_model(std::string(SPINAL_MODELS_DIR) + "/three-type.yaml");
  CHECK(three.dim() == 3);
  CHECK(three.K() == 20);
}

TEST_CASE("parse_model error cases") {
  CHECK(throws_with([] { parse_model(one_event_model("[1, 0]", "[{monomial: [0, 0], coef: -0.5}]", 2)); },
                    "negative rate"));
  CHECK(throws_with([] { parse_model(one_event_model("[3, 0]", "[{monomial: [0, 0], coef: 1}]", 2, "none")); },
                    "capacity guard violated"));
  // the same event is fine with the structural guard
  CHECK_NOTHROW(parse_model(one_event_model("[3, 0]", "[{monomial: [0, 0], coef: 1}]", 2)));
  const std::string dup = std::string(kHeader) +
                          "types: [A]\nK: 3\nevents:\n"
                          "  - {parent: A, offspring: [2], rate: [{monomial: [0], coef: 1}]}\n"
                          "  - {parent: A, offspring: [2], rate: [{monomial: [0], coef: 2}]}\n";
  CHECK(throws_with([&] { parse_model(dup); }, "duplicate event"));
  CHECK(throws_with([] { parse_model("types: [A]\nK: 1\nevents: []\n"); }, "schema violation"));
  CHECK(throws_with([] { parse_model(std::string(kHeader) + "types: [A]\nevents: []\n"); }, "schema violation"));
  CHECK(throws_with([] { parse_model(std::string(kHeader) + "types: [A, A]\nK: 1\nevents: []\n"); },
                    "duplicate type"));
  CHECK(throws_with([] { parse_model(one_event_model("[1, 0]", "[{monomial: [0], coef: 1}]", 2)); },
                    "schema violation"));
  CHECK(throws_with([] { parse_model(std::string(kHeader) + "types: [A]\nK: 0\nevents: []\n"); }, "capacity"));
  // negative only in the interior of the simplex-box
  CHECK(throws_with(
      [] {
        parse_model(one_event_model(
            "[1, 1]", "[{monomial: [0, 0], coef: 0.1}, {monomial: [1, 1], coef: -1}]", 4));
      },
      "negative rate"));
  const std::string bad_psi = std::string(kHeader) +
                              "types: [A]\nK: 3\nevents: []\npsi:\n  A: [{monomial: [1], coef: -1}]\n";
  CHECK(throws_with([&] { parse_model(bad_psi); }, "psi"));
}

TEST_CASE("render and parse round trip for every preset") {
  for (const auto& name : preset_names()) {
    const auto m = make_preset(name, {});
    const auto back = parse_model(render_model(m));
    CHECK_MESSAGE(back == m, name);
    CHECK(model_hash(back) == model_hash(m));
  }
  const auto sir = load_model(std::string(SPINAL_MODELS_DIR) + "/sir-like.yaml");
  CHECK(parse_model(render_model(sir)) == sir);
  CHECK_FALSE(sir.psi().constant_one);
}

TEST_CASE("capacity guard holds over the full state space") {
  for (const auto& name : preset_names()) {
    const auto m = make_preset(name, {}, name == "yule" || name == "logistic" ? 30 : 0);
    const auto idx = enumerate_states(m);
    for (std::size_t i = 0; i < idx->size(); ++i) {
      const int* z = idx->counts_of(i);
      int tot = 0;
      for (int d = 0; d < m.dim(); ++d) tot += z[d];
      for (int e = 0; e < m.num_events(); ++e) {
        const auto& ev = m.event(e);
        if (z[ev.parent] < 1) continue;
        if (tot + ev.size() - 1 > m.K()) CHECK(m.rate_counts(e, z) == 0.0);
        CHECK(m.rate_counts(e, z) >= 0.0);
      }
    }
  }
}

TEST_CASE("polynomial evaluation is exact at rational points") {
  RatePolynomial p(2);
  p.add_term({2, 0}, 4);
  p.add_term({1, 0}, -4);
  p.add_term({0, 0}, 1);
  p.add_term({1, 1}, 3);
  const double zs[][2] = {{0.5, 0.0}, {0.25, 0.5}, {0.75, 0.125}, {1.0, 0.0}};
  for (const auto& z : zs) {
    const double expect = 4 * z[0] * z[0] - 4 * z[0] + 1 + 3 * z[0] * z[1];
    CHECK(p.evaluate(z) == expect);
  }
  p.add_term({1, 1}, -3);
  CHECK(p.terms().size() == 3);
  CHECK(p.max_degree() == 2);
  CHECK(p.sup_bound() == 9.0);
}

TEST_CASE("state enumeration") {
  const auto toy = preset_toy(1.0, 2.0);
  const auto full = enumerate_states(toy);
  CHECK(full->size() == 6);
  const auto reach = enumerate_reachable(toy, {{0, {1, 0}}});
  REQUIRE(reach->size() == 4);
  const std::pair<int, Counts> order[] = {{0, {1, 0}}, {0, {2, 0}}, {0, {1, 1}}, {1, {1, 1}}};
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(reach->type_of(i) == order[i].first);
    CHECK(reach->counts_vec(i) == order[i].second);
  }

  const auto one = enumerate_states(preset_yule(1.0, 1));
  CHECK(one->size() == 1);

  for (int K : {1, 2, 3, 5}) {
    const auto m = preset_pure_type_change(1.0, 0.5, K);
    const auto idx = enumerate_states(m);
    const auto brute = brute_states(2, K);
    CHECK(idx->size() == brute.size());
    for (std::size_t i = 0; i < idx->size(); ++i) {
      CHECK(brute.count({idx->type_of(i), idx->counts_vec(i)}) == 1);
      CHECK(idx->find(idx->type_of(i), idx->counts_vec(i)) == static_cast<long>(i));
    }
  }
  const auto three = enumerate_states(preset_three_type(2, 0.3, 0.5, 0.4, 6));
  CHECK(three->size() == brute_states(3, 6).size());
  for (std::size_t i = 0; i < three->size(); ++i)
    CHECK(three->find(three->type_of(i), three->counts_vec(i)) == static_cast<long>(i));

  CHECK(throws_with([] { enumerate_states(preset_three_type(2, 0.3, 0.5, 0.4, 400), 1000); },
                    "state-space cap exceeded"));
}

TEST_CASE("composition counting matches brute force") {
  for (int D = 1; D <= 4; ++D)
    for (int K = 0; K <= 6; ++K) {
      std::uint64_t n = 0;
      for_each_composition(D, K, [&](const std::vector<int>&) { ++n; });
      CHECK(n == count_compositions(D, K));
    }
}

TEST_CASE("with_capacity keeps polynomials") {
  const auto m = preset_logistic(2.0, 1.0, 100);
  const auto m2 = m.with_capacity(400);
  CHECK(m2.K() == 400);
  for (int e = 0; e < m.num_events(); ++e) CHECK(m.event(e) == m2.event(e));
  const int z1[] = {50}, z2[] = {200};
  CHECK(m.rate_counts(0, z1) == m2.rate_counts(0, z2));
}
