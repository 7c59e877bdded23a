#include "spinal/popsim.hpp"

#include <algorithm>
#include <ostream>

#include "spinal/parallel.hpp"

namespace spinal {

int GenealogyForest::add_root(int type) {
  Individual n;
  n.rank = ++roots_;
  n.type = type;
  n.root = static_cast<int>(nodes_.size());
  nodes_.push_back(n);
  return n.root;
}

int GenealogyForest::add_child(int parent, int rank, int type, double birth) {
  Individual n;
  n.parent = parent;
  n.rank = rank;
  n.root = nodes_[static_cast<std::size_t>(parent)].root;
  n.type = type;
  n.birth = birth;
  nodes_.push_back(n);
  return static_cast<int>(nodes_.size()) - 1;
}

std::vector<int> GenealogyForest::alive_at(double t) const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i)
    if (alive_at(i, t)) out.push_back(i);
  return out;
}

int GenealogyForest::ancestor_at(int id, double s) const {
  while ((*this)[id].birth > s && (*this)[id].parent >= 0) id = (*this)[id].parent;
  return id;
}

std::vector<int> GenealogyForest::label(int id) const {
  std::vector<int> l;
  for (; id >= 0; id = (*this)[id].parent) l.push_back((*this)[id].rank);
  std::reverse(l.begin(), l.end());
  return l;
}

std::string GenealogyForest::label_string(int id) const {
  std::string s;
  for (int r : label(id)) {
    if (!s.empty()) s += '.';
    s += std::to_string(r);
  }
  return s;
}

void GenealogyForest::write(std::ostream& out, const TypeSpace& types) const {
  out << "label\ttype\tbirth\tdeath\tparent\n";
  for (int i = 0; i < size(); ++i) {
    const auto& n = (*this)[i];
    out << label_string(i) << '\t' << types.names[static_cast<std::size_t>(n.type)] << '\t' << n.birth << '\t';
    if (n.death == kNever)
      out << "NA";
    else
      out << n.death;
    out << '\t' << (n.parent >= 0 ? label_string(n.parent) : std::string("-")) << '\n';
  }
}

const int* PopulationPath::composition_at(double s) const {
  const auto it = std::upper_bound(times.begin(), times.end(), s);
  const auto i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - times.begin()) - 1));
  return counts_at_jump(i);
}

int PopulationPath::total_at(double s) const {
  const int* z = composition_at(s);
  int n = 0;
  for (int i = 0; i < D; ++i) n += z[i];
  return n;
}

void PopulationPath::write(std::ostream& out, const TypeSpace& types) const {
  out << "time";
  for (const auto& n : types.names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < jumps(); ++i) {
    out << times[i];
    for (int x = 0; x < D; ++x) out << ',' << counts_at_jump(i)[x];
    out << '\n';
  }
}

void simulate_population(const ModelSpec& model, const Counts& init, double T, Rng& rng, PopulationRun& out) {
  const int D = model.dim();
  if (static_cast<int>(init.size()) != D) throw ModelError("initial composition has wrong dimension");
  int total = 0;
  for (int v : init) {
    if (v < 0) throw ModelError("initial counts must be nonnegative");
    total += v;
  }
  if (total > model.K()) throw ModelError("initial population exceeds capacity K");
  if (T < 0) throw ModelError("horizon must be nonnegative");

  auto& forest = out.forest;
  auto& path = out.path;
  forest.clear();
  path.D = D;
  path.K = model.K();
  path.horizon = T;
  path.times.assign(1, 0.0);
  path.counts.assign(init.begin(), init.end());

  std::vector<std::vector<int>> alive(static_cast<std::size_t>(D));
  for (int x = 0; x < D; ++x)
    for (int j = 0; j < init[static_cast<std::size_t>(x)]; ++j) alive[static_cast<std::size_t>(x)].push_back(forest.add_root(x));

  Counts z = init;
  const int J = model.num_events();
  std::vector<double> rates(static_cast<std::size_t>(J));
  std::vector<int> children;
  double s = 0.0;
  while (true) {
    double lambda = 0.0;
    for (int e = 0; e < J; ++e) {
      const int y = model.event(e).parent;
      const double r = z[static_cast<std::size_t>(y)] > 0 ? z[static_cast<std::size_t>(y)] * model.rate_counts(e, z.data()) : 0.0;
      rates[static_cast<std::size_t>(e)] = r;
      lambda += r;
    }
    if (lambda <= 0.0) break;
    s += rng.exponential(lambda);
    if (s >= T) break;

    double u = rng.uniform() * lambda;
    int e = 0;
    while (e < J - 1 && (u >= rates[static_cast<std::size_t>(e)] || rates[static_cast<std::size_t>(e)] == 0.0)) {
      u -= rates[static_cast<std::size_t>(e)];
      ++e;
    }
    const auto& ev = model.event(e);
    const int y = ev.parent;
    auto& pool = alive[static_cast<std::size_t>(y)];
    const auto slot = static_cast<std::size_t>(rng.below(pool.size()));
    const int id = pool[slot];
    pool[slot] = pool.back();
    pool.pop_back();
    forest.kill(id, s);

    // Uniform arrangement of the offspring multiset.
    children.clear();
    for (int w = 0; w < D; ++w)
      for (int c = 0; c < ev.offspring[static_cast<std::size_t>(w)]; ++c) children.push_back(w);
    for (std::size_t i = children.size(); i > 1; --i) std::swap(children[i - 1], children[rng.below(i)]);
    for (std::size_t r = 0; r < children.size(); ++r) {
      const int w = children[r];
      alive[static_cast<std::size_t>(w)].push_back(forest.add_child(id, static_cast<int>(r) + 1, w, s));
    }

    for (int w = 0; w < D; ++w) z[static_cast<std::size_t>(w)] += ev.offspring[static_cast<std::size_t>(w)];
    --z[static_cast<std::size_t>(y)];
    path.times.push_back(s);
    path.counts.insert(path.counts.end(), z.begin(), z.end());
  }

  out.alive.clear();
  for (const auto& pool : alive) out.alive.insert(out.alive.end(), pool.begin(), pool.end());
}

PopulationRun simulate_population(const ModelSpec& model, const Counts& init, double T, std::uint64_t seed) {
  PopulationRun run;
  Rng rng(seed, streams::kPopulation, 0);
  simulate_population(model, init, T, rng, run);
  return run;
}

void ancestral_type_path(const GenealogyForest& forest, int u, double t, TypePath& out) {
  thread_local std::vector<int> chain;
  chain.clear();
  for (int v = u; v >= 0; v = forest[v].parent) chain.push_back(v);
  out.reset(forest[chain.back()].type, t);
  for (auto it = chain.rbegin() + 1; it < chain.rend(); ++it) out.jump(forest[*it].birth, forest[*it].type);
}

TypePath LineagePath::type_path() const {
  TypePath p;
  p.reset(types.front(), horizon);
  for (std::size_t i = 1; i < times.size(); ++i) p.jump(times[i], types[i]);
  return p;
}

LineagePath extract_lineage(const GenealogyForest& forest, const PopulationPath& path, int u, double t) {
  if (u < 0 || u >= forest.size() || !forest.alive_at(u, t)) throw ModelError("individual is not alive at time t");
  TypePath tp;
  ancestral_type_path(forest, u, t, tp);
  LineagePath lp;
  lp.D = path.D;
  lp.horizon = t;
  // Merge ancestor type changes with composition jumps up to t.
  std::size_t i = 0, j = 0;
  while (true) {
    const double ti = i < tp.times.size() ? tp.times[i] : kNever;
    const double tj = j < path.jumps() && path.times[j] <= t ? path.times[j] : kNever;
    const double s = std::min(ti, tj);
    if (s == kNever) break;
    if (ti == s) ++i;
    if (tj == s) ++j;
    lp.times.push_back(s);
    lp.types.push_back(tp.type_at(s));
    const int* z = path.composition_at(s);
    lp.counts.insert(lp.counts.end(), z, z + path.D);
  }
  return lp;
}

std::vector<double> lineage_functional_sums(const GenealogyForest& forest, const PopulationPath& path,
                                            const std::vector<Functional>& Fs, const ModelSpec& model, double t) {
  std::vector<double> sums(Fs.size(), 0.0);
  const int* zt = path.composition_at(t);
  PopulationTrack track(path);
  TypePath tp;
  for (int u = 0; u < forest.size(); ++u) {
    if (!forest.alive_at(u, t)) continue;
    const double w = model.psi_counts(forest[u].type, zt);
    ancestral_type_path(forest, u, t, tp);
    for (std::size_t f = 0; f < Fs.size(); ++f) sums[f] += w * Fs[f].evaluate(tp, &track);
  }
  return sums;
}

double lineage_functional_sum(const GenealogyForest& forest, const PopulationPath& path, const Functional& F,
                              const ModelSpec& model, double t) {
  return lineage_functional_sums(forest, path, {F}, model, t)[0];
}

int designated_root(const Counts& init, int x) {
  if (x < 0 || x >= static_cast<int>(init.size()) || init[static_cast<std::size_t>(x)] < 1)
    throw ModelError("no root of the requested type");
  int id = 0;
  for (int w = 0; w < x; ++w) id += init[static_cast<std::size_t>(w)];
  return id;
}

Estimate estimate_m_mc(const ModelSpec& model, int x, const Counts& z, double t, std::size_t N, std::uint64_t seed) {
  const int ux = designated_root(z, x);
  std::vector<double> values(N);
  std::vector<PopulationRun> scratch(worker_count());
  parallel_for(N, [&](unsigned w, std::size_t i) {
    Rng rng(seed, streams::kPopulation, i);
    auto& run = scratch[w];
    simulate_population(model, z, t, rng, run);
    const int* zt = run.path.final_composition();
    double v = 0.0;
    for (int id : run.alive)
      if (run.forest[id].root == ux) v += model.psi_counts(run.forest[id].type, zt);
    values[i] = v;
  });
  return summarize(values);
}

std::vector<Estimate> estimate_lineage_sums(const ModelSpec& model, const Counts& z, double t,
                                            const std::vector<Functional>& Fs, std::size_t N, std::uint64_t seed,
                                            double scale) {
  std::vector<std::vector<double>> values(Fs.size(), std::vector<double>(N));
  std::vector<PopulationRun> scratch(worker_count());
  parallel_for(N, [&](unsigned w, std::size_t i) {
    Rng rng(seed, streams::kPopulation, i);
    auto& run = scratch[w];
    simulate_population(model, z, t, rng, run);
    const auto sums = lineage_functional_sums(run.forest, run.path, Fs, model, t);
    for (std::size_t f = 0; f < Fs.size(); ++f) values[f][i] = sums[f] * scale;
  });
  std::vector<Estimate> out;
  for (const auto& v : values) out.push_back(summarize(v));
  return out;
}

}  // namespace spinal
