#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "spinal/functional.hpp"
#include "spinal/model.hpp"
#include "spinal/msolver.hpp"
#include "spinal/rng.hpp"
#include "spinal/stats.hpp"

namespace spinal {

struct SpineStateK {
  int type = 0;
  Counts counts;
};

// Piecewise-constant (spine type, composition) path; entry 0 at time 0.
struct SpinePathK {
  int D = 0;
  int K = 0;
  double horizon = 0.0;
  std::vector<double> times;
  std::vector<int> types;
  std::vector<int> counts;

  void reset(int D_, int K_, double T, int type, const int* z);
  void push(double s, int type, const int* z);
  std::size_t jumps() const { return times.size(); }
  const int* counts_at_jump(std::size_t i) const { return counts.data() + i * static_cast<std::size_t>(D); }
  std::size_t jump_index(double s) const;
  SpineStateK state_at(double s) const;
  SpineStateK final_state() const { return state_at(horizon); }
  TypePath type_path() const;
  void write(std::ostream& out, const TypeSpace& types) const;
};

class SpineTrack final : public CompositionTrack {
 public:
  explicit SpineTrack(const SpinePathK& path) : path_(path) {}
  double coordinate(int x, double s) const override {
    return double(path_.counts_at_jump(path_.jump_index(s))[x]) / path_.K;
  }

 private:
  const SpinePathK& path_;
};

// One channel of the spinal dynamics out of a given state.
struct SpineChannel {
  enum class Kind { Spine, Other };
  Kind kind = Kind::Spine;
  int event = 0;
  int type = 0;       // new spine type (Spine) or reproducing type (Other)
  long target = -1;   // state index after the jump
  double base = 0.0;  // k_y tau_k(x, z) or (z_y - 1{x=y}) tau_k(y, z)
  double rate = 0.0;  // base times the m ratio at the requested time
};

struct RateTableK {
  double s = 0.0;
  std::vector<SpineChannel> channels;
  double total() const;
};

// Time-s channel table of the time-t spine at `state`.
RateTableK inhom_spine_rates(const ModelSpec& model, const MTable& mtab, double s, const SpineStateK& state, double t);

// Thinning simulator of the time-inhomogeneous spine for a fixed horizon t.
// Holds per-state channel caches; use one instance per thread.
class InhomSpineSimulator {
 public:
  InhomSpineSimulator(const ModelSpec& model, const MTable& mtab, double t);

  // Runs from state index i0 over [s0, s1]; returns the final state index.
  std::size_t run(std::size_t i0, double s0, double s1, Rng& rng, SpinePathK* path = nullptr);

  const std::vector<SpineChannel>& channels(std::size_t i);
  double horizon() const { return t_; }
  std::size_t rejected() const { return rejected_; }
  std::size_t accepted() const { return accepted_; }

 private:
  const ModelSpec& model_;
  const MTable& mtab_;
  double t_;
  std::vector<std::vector<SpineChannel>> cache_;
  std::vector<char> cached_;
  std::vector<double> scratch_;
  std::size_t rejected_ = 0;
  std::size_t accepted_ = 0;
};

SpinePathK simulate_inhom_spine(const ModelSpec& model, const MTable& mtab, int x0, const Counts& z0, double t,
                                std::uint64_t seed);

struct GeneratorCheckRow {
  long target = -1;  // state index; the starting state is the "stay" row
  double expected = 0.0;
  double observed = 0.0;
  double sd = 0.0;
  double allowance = 0.0;
  double deviation = 0.0;  // (observed - expected) / sd
  bool pass = false;
};

struct GeneratorCheckReport {
  std::vector<GeneratorCheckRow> rows;
  double max_abs_deviation = 0.0;
  bool pass = false;
};

// Empirical one-step transitions over [s, s + dt] from `state` compared with
// the generator rates m(j)/m(i) G_ij at time s.
GeneratorCheckReport generator_check(const ModelSpec& model, const GeneratorMatrix& G, const MTable& mtab, double s,
                                     const SpineStateK& state, double t, double dt, std::size_t N, std::uint64_t seed);

// (A f)(i) = m^{-1} (G(m f) - G(m) f) at time s, for every state.
std::vector<double> apply_spine_generator(const GeneratorMatrix& G, const MTable& mtab, double s, double t,
                                          const std::vector<double>& f);
// Same operator from the channel table: sum_ch rate * (f(target) - f(i)).
double apply_spine_generator_rates(const RateTableK& table, std::size_t i, const std::vector<double>& f);

// Homogeneous spine with psi = 1 at finite K: the rest of the population
// follows the original rates, the spine is replaced by k and becomes type y
// at rate k_y tau_k. log_weight accumulates the integral of lambda.
struct HomSpineRunK {
  SpinePathK path;
  double log_weight = 0.0;
};
void simulate_hom_spine_k(const ModelSpec& model, int x0, const Counts& z0, double t, Rng& rng, HomSpineRunK& out);
HomSpineRunK simulate_hom_spine_k(const ModelSpec& model, int x0, const Counts& z0, double t, std::uint64_t seed);

// sum_x z_x m(x, z, t) E_{x,z}[F(spine path)], N spine paths per start type.
std::vector<Estimate> many_to_one_rhs(const ModelSpec& model, const MTable& mtab, const Counts& z0,
                                      const std::vector<Functional>& Fs, double t, std::size_t N, std::uint64_t seed);

}  // namespace spinal
