#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "spinal/functional.hpp"
#include "spinal/model.hpp"
#include "spinal/rng.hpp"
#include "spinal/stats.hpp"

namespace spinal {

inline constexpr double kNever = std::numeric_limits<double>::infinity();

struct Individual {
  int parent = -1;  // arena handle, -1 for roots
  int rank = 0;     // last Ulam-Harris coordinate
  int root = 0;     // handle of the founding root
  int type = 0;
  double birth = 0.0;
  double death = kNever;
};

// Append-only arena of individuals. Labels are materialized on demand.
class GenealogyForest {
 public:
  void clear() {
    nodes_.clear();
    roots_ = 0;
  }
  int add_root(int type);
  int add_child(int parent, int rank, int type, double birth);
  void kill(int id, double t) { nodes_[static_cast<std::size_t>(id)].death = t; }

  const Individual& operator[](int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  int size() const { return static_cast<int>(nodes_.size()); }
  int num_roots() const { return roots_; }

  bool alive_at(int id, double t) const {
    const auto& n = (*this)[id];
    return n.birth <= t && t < n.death;
  }
  std::vector<int> alive_at(double t) const;
  // The ancestor of id (possibly id itself) alive at time s <= birth(id).
  int ancestor_at(int id, double s) const;

  std::vector<int> label(int id) const;
  std::string label_string(int id) const;

  // One record per individual: label, type, birth, death, parent label.
  void write(std::ostream& out, const TypeSpace& types) const;

 private:
  std::vector<Individual> nodes_;
  int roots_ = 0;
};

// Composition after each jump; entry 0 is the initial state at time 0.
struct PopulationPath {
  int D = 0;
  int K = 0;
  double horizon = 0.0;
  std::vector<double> times;
  std::vector<int> counts;

  std::size_t jumps() const { return times.size(); }
  const int* counts_at_jump(std::size_t i) const { return counts.data() + i * static_cast<std::size_t>(D); }
  // Composition in force at time s (right-continuous).
  const int* composition_at(double s) const;
  const int* final_composition() const { return counts_at_jump(jumps() - 1); }
  int total_at(double s) const;

  void write(std::ostream& out, const TypeSpace& types) const;
};

class PopulationTrack final : public CompositionTrack {
 public:
  explicit PopulationTrack(const PopulationPath& path) : path_(path) {}
  double coordinate(int x, double s) const override {
    return double(path_.composition_at(s)[x]) / path_.K;
  }

 private:
  const PopulationPath& path_;
};

struct PopulationRun {
  GenealogyForest forest;
  PopulationPath path;
  std::vector<int> alive;  // handles alive at the horizon, grouped by type
};

// Exact Gillespie simulation from `init` counts over [0, T]. Reuses the
// storage in `out`.
void simulate_population(const ModelSpec& model, const Counts& init, double T, Rng& rng, PopulationRun& out);
PopulationRun simulate_population(const ModelSpec& model, const Counts& init, double T, std::uint64_t seed);

// Jump list of (ancestor type, composition) along the lineage of u on [0, t].
struct LineagePath {
  int D = 0;
  double horizon = 0.0;
  std::vector<double> times;
  std::vector<int> types;
  std::vector<int> counts;

  TypePath type_path() const;
};

LineagePath extract_lineage(const GenealogyForest& forest, const PopulationPath& path, int u, double t);

// Ancestral type path of u over [0, t] into `out` (no allocation once warm).
void ancestral_type_path(const GenealogyForest& forest, int u, double t, TypePath& out);

// Sum over individuals alive at t of psi(x_u(t), Z(t)) * F(lineage of u).
double lineage_functional_sum(const GenealogyForest& forest, const PopulationPath& path, const Functional& F,
                              const ModelSpec& model, double t);
std::vector<double> lineage_functional_sums(const GenealogyForest& forest, const PopulationPath& path,
                                            const std::vector<Functional>& Fs, const ModelSpec& model, double t);

// Roots are numbered by type; the designated root of type x is the first.
int designated_root(const Counts& init, int x);

// Monte-Carlo estimate of m(x, z, t): psi-weighted count of time-t
// descendants of the designated type-x root.
Estimate estimate_m_mc(const ModelSpec& model, int x, const Counts& z, double t, std::size_t N, std::uint64_t seed);

// Per-functional Monte-Carlo estimates of E_z[sum_u psi F] over N forests.
std::vector<Estimate> estimate_lineage_sums(const ModelSpec& model, const Counts& z, double t,
                                            const std::vector<Functional>& Fs, std::size_t N, std::uint64_t seed,
                                            double scale = 1.0);

}  // namespace spinal
