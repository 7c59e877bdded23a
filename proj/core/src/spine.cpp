#include "spinal/spine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <ostream>

#include "spinal/parallel.hpp"

namespace spinal {

namespace {

constexpr double kMFloor = 1e-30;
constexpr double kBoundMargin = 1.02;

std::vector<SpineChannel> build_channels(const ModelSpec& model, const StateIndex& idx, int x, const int* z) {
  const int D = model.dim();
  std::vector<SpineChannel> out;
  Counts nz(static_cast<std::size_t>(D));
  auto shift = [&](const OffspringEvent& ev) {
    for (int w = 0; w < D; ++w) nz[static_cast<std::size_t>(w)] = z[w] + ev.offspring[static_cast<std::size_t>(w)];
    --nz[static_cast<std::size_t>(ev.parent)];
  };
  auto locate = [&](int type) {
    const long j = idx.find(type, nz);
    if (j < 0) throw ModelError("spine target state outside the m table");
    return j;
  };
  for (int e : model.events_of(x)) {
    const double r = model.rate_counts(e, z);
    if (r <= 0.0) continue;
    const auto& ev = model.event(e);
    shift(ev);
    for (int y = 0; y < D; ++y) {
      const int ky = ev.offspring[static_cast<std::size_t>(y)];
      if (ky > 0) out.push_back({SpineChannel::Kind::Spine, e, y, locate(y), ky * r, 0.0});
    }
  }
  for (int e = 0; e < model.num_events(); ++e) {
    const auto& ev = model.event(e);
    const int mult = z[ev.parent] - (ev.parent == x ? 1 : 0);
    if (mult <= 0) continue;
    const double r = model.rate_counts(e, z);
    if (r <= 0.0) continue;
    shift(ev);
    out.push_back({SpineChannel::Kind::Other, e, ev.parent, locate(x), mult * r, 0.0});
  }
  return out;
}

}  // namespace

void SpinePathK::reset(int D_, int K_, double T, int type, const int* z) {
  D = D_;
  K = K_;
  horizon = T;
  times.assign(1, 0.0);
  types.assign(1, type);
  counts.assign(z, z + D);
}

void SpinePathK::push(double s, int type, const int* z) {
  times.push_back(s);
  types.push_back(type);
  counts.insert(counts.end(), z, z + D);
}

std::size_t SpinePathK::jump_index(double s) const {
  const auto it = std::upper_bound(times.begin(), times.end(), s);
  return static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - times.begin()) - 1));
}

SpineStateK SpinePathK::state_at(double s) const {
  const std::size_t i = jump_index(s);
  return {types[i], Counts(counts_at_jump(i), counts_at_jump(i) + D)};
}

TypePath SpinePathK::type_path() const {
  TypePath p;
  p.reset(types.front(), horizon);
  for (std::size_t i = 1; i < times.size(); ++i) p.jump(times[i], types[i]);
  return p;
}

void SpinePathK::write(std::ostream& out, const TypeSpace& ts) const {
  out << "time,spine";
  for (const auto& n : ts.names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < jumps(); ++i) {
    out << times[i] << ',' << ts.names[static_cast<std::size_t>(types[i])];
    for (int x = 0; x < D; ++x) out << ',' << counts_at_jump(i)[x];
    out << '\n';
  }
}

double RateTableK::total() const {
  double s = 0.0;
  for (const auto& c : channels) s += c.rate;
  return s;
}

RateTableK inhom_spine_rates(const ModelSpec& model, const MTable& mtab, double s, const SpineStateK& state, double t) {
  if (!(s >= 0.0) || s > t) throw ModelError("spine rates need 0 <= s <= t");
  const auto& idx = mtab.index();
  const long i = idx.find(state.type, state.counts);
  if (i < 0) throw ModelError("spine state is not in S_K");
  const double tau = t - s;
  const std::size_t j = mtab.cell(tau);
  const double mc = mtab.m_in_cell(static_cast<std::size_t>(i), j, tau);
  if (mc < kMFloor) throw ModelError("m underflow in spine rates");
  RateTableK table;
  table.s = s;
  table.channels = build_channels(model, idx, state.type, state.counts.data());
  for (auto& ch : table.channels) ch.rate = ch.base * mtab.m_in_cell(static_cast<std::size_t>(ch.target), j, tau) / mc;
  return table;
}

InhomSpineSimulator::InhomSpineSimulator(const ModelSpec& model, const MTable& mtab, double t)
    : model_(model), mtab_(mtab), t_(t) {
  if (!(t >= 0.0) || t > mtab.horizon() * (1 + 1e-12)) throw ModelError("spine horizon exceeds the m table");
  cache_.resize(mtab.states());
  cached_.assign(mtab.states(), 0);
}

const std::vector<SpineChannel>& InhomSpineSimulator::channels(std::size_t i) {
  if (!cached_[i]) {
    const auto& idx = mtab_.index();
    cache_[i] = build_channels(model_, idx, idx.type_of(i), idx.counts_of(i));
    cached_[i] = 1;
  }
  return cache_[i];
}

std::size_t InhomSpineSimulator::run(std::size_t i, double s0, double s1, Rng& rng, SpinePathK* path) {
  const auto& idx = mtab_.index();
  const auto& grid = mtab_.grid();
  if (s1 > t_ || s0 < 0.0) throw ModelError("spine run interval outside [0, t]");
  if (path) path->reset(idx.dim(), idx.K(), s1, idx.type_of(i), idx.counts_of(i));
  double s = s0;
  if (s >= s1 || grid.size() < 2) return i;

  std::size_t j = mtab_.cell(t_ - s);
  while (j > 0 && t_ - s <= grid[j]) --j;

  while (s < s1) {
    const double seg_end = std::min(s1, t_ - grid[j]);
    bool moved_cell = false;
    while (!moved_cell) {
      const auto& chans = channels(i);
      const double mmin = std::min(mtab_.value(j, i), mtab_.value(j + 1, i));
      if (mmin < kMFloor) throw ModelError("m underflow below 1e-30 in spine simulation");
      double bound = 0.0;
      for (const auto& ch : chans) {
        const auto tg = static_cast<std::size_t>(ch.target);
        bound += ch.base * std::max(mtab_.value(j, tg), mtab_.value(j + 1, tg));
      }
      bound *= kBoundMargin / mmin;

      bool jumped = false;
      while (!jumped) {
        const double next = bound > 0.0 ? s + rng.exponential(bound) : seg_end;
        if (next >= seg_end) {
          s = seg_end;
          moved_cell = true;
          break;
        }
        s = next;
        const double tau = t_ - s;
        const double mc = mtab_.m_in_cell(i, j, tau);
        scratch_.resize(chans.size());
        double total = 0.0;
        for (std::size_t c = 0; c < chans.size(); ++c) {
          scratch_[c] = chans[c].base * mtab_.m_in_cell(static_cast<std::size_t>(chans[c].target), j, tau) / mc;
          total += scratch_[c];
        }
        if (total > bound) throw ModelError("thinning bound violated in spine simulation");
        double u = rng.uniform() * bound;
        if (u >= total) {
          ++rejected_;
          continue;
        }
        std::size_t c = 0;
        while (c + 1 < chans.size() && u >= scratch_[c]) {
          u -= scratch_[c];
          ++c;
        }
        i = static_cast<std::size_t>(chans[c].target);
        ++accepted_;
        if (path) path->push(s, idx.type_of(i), idx.counts_of(i));
        jumped = true;
      }
    }
    if (s >= s1 || j == 0) break;
    --j;
  }
  return i;
}

SpinePathK simulate_inhom_spine(const ModelSpec& model, const MTable& mtab, int x0, const Counts& z0, double t,
                                std::uint64_t seed) {
  const long i0 = mtab.index().find(x0, z0);
  if (i0 < 0) throw ModelError("initial spine state is not in S_K");
  InhomSpineSimulator sim(model, mtab, t);
  Rng rng(seed, streams::kSpine, 0);
  SpinePathK path;
  sim.run(static_cast<std::size_t>(i0), 0.0, t, rng, &path);
  return path;
}

std::vector<double> apply_spine_generator(const GeneratorMatrix& G, const MTable& mtab, double s, double t,
                                          const std::vector<double>& f) {
  const std::size_t n = G.size();
  if (f.size() != n || mtab.states() != n) throw ModelError("generator and function sizes differ");
  const double tau = t - s;
  const std::size_t j = mtab.cell(tau);
  std::vector<double> m(n), mf(n), Gm(n), Gmf(n), out(n);
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = mtab.m_in_cell(i, j, tau);
    mf[i] = m[i] * f[i];
  }
  G.multiply(m.data(), Gm.data());
  G.multiply(mf.data(), Gmf.data());
  for (std::size_t i = 0; i < n; ++i) out[i] = (Gmf[i] - Gm[i] * f[i]) / m[i];
  return out;
}

double apply_spine_generator_rates(const RateTableK& table, std::size_t i, const std::vector<double>& f) {
  double acc = 0.0;
  for (const auto& ch : table.channels) acc += ch.rate * (f[static_cast<std::size_t>(ch.target)] - f[i]);
  return acc;
}

GeneratorCheckReport generator_check(const ModelSpec& model, const GeneratorMatrix& G, const MTable& mtab, double s,
                                     const SpineStateK& state, double t, double dt, std::size_t N,
                                     std::uint64_t seed) {
  if (!(dt > 0.0) || s + dt > t) throw ModelError("generator check needs s + dt <= t");
  const auto& idx = mtab.index();
  const long i0l = idx.find(state.type, state.counts);
  if (i0l < 0) throw ModelError("generator check state is not in S_K");
  const auto i0 = static_cast<std::size_t>(i0l);

  // Off-diagonal generator rates m(j)/m(i0) G_{i0 j} at time u.
  auto rates_at = [&](double u) {
    const double tau = t - u;
    std::map<long, double> r;
    const double mi = mtab.m_at_index(i0, tau);
    for (int p = G.row_ptr[i0]; p < G.row_ptr[i0 + 1]; ++p) {
      const auto j = static_cast<std::size_t>(G.cols[static_cast<std::size_t>(p)]);
      if (j != i0) r[static_cast<long>(j)] = G.vals[static_cast<std::size_t>(p)] * mtab.m_at_index(j, tau) / mi;
    }
    return r;
  };
  const auto r0 = rates_at(s);
  const auto r1 = rates_at(s + dt);
  auto total = [](const std::map<long, double>& r) {
    double a = 0.0;
    for (const auto& kv : r) a += kv.second;
    return a;
  };
  const double lam0 = total(r0);

  // Largest total jump rate among the states visited within one step.
  double lam_max = 0.0;
  for (double u : {s, s + dt}) {
    lam_max = std::max(lam_max, total(rates_at(u)));
    for (const auto& kv : r0) {
      SpineStateK st{idx.type_of(static_cast<std::size_t>(kv.first)), idx.counts_vec(static_cast<std::size_t>(kv.first))};
      lam_max = std::max(lam_max, inhom_spine_rates(model, mtab, u, st, t).total());
    }
  }
  lam_max *= 1.1;

  std::vector<std::size_t> finals(N);
  std::vector<std::unique_ptr<InhomSpineSimulator>> sims(worker_count());
  parallel_for(N, [&](unsigned w, std::size_t k) {
    if (!sims[w]) sims[w] = std::make_unique<InhomSpineSimulator>(model, mtab, t);
    Rng rng(seed, streams::kGeneratorCheck, k);
    finals[k] = sims[w]->run(i0, s, s + dt, rng, nullptr);
  });
  std::map<long, double> observed;
  for (auto f : finals) observed[static_cast<long>(f)] += 1.0;

  const double Nd = double(N);
  GeneratorCheckReport rep;
  // p: first-order probability; r: its rate; slope: dr/ds over the step.
  auto add_row = [&](long target, double p, double r, double slope) {
    GeneratorCheckRow row;
    row.target = target;
    row.expected = Nd * p;
    row.observed = observed.count(target) ? observed[target] : 0.0;
    const double q = std::clamp(p, 0.0, 1.0);
    row.sd = std::sqrt(Nd * q * (1 - q));
    row.allowance = Nd * ((2 * lam_max * r + std::abs(slope)) * dt * dt / 2 + (lam_max * dt) * (lam_max * dt) / 2);
    const double gap = std::abs(row.observed - row.expected);
    row.deviation = row.sd > 0 ? (row.observed - row.expected) / row.sd : (gap == 0 ? 0.0 : INFINITY);
    row.pass = gap <= 3 * row.sd + row.allowance;
    rep.rows.push_back(row);
  };
  for (const auto& [j, r] : r0) {
    const double slope = ((r1.count(j) ? r1.at(j) : 0.0) - r) / dt;
    add_row(j, r * dt, r, slope);
  }
  for (const auto& kv : observed)
    if (kv.first != static_cast<long>(i0) && !r0.count(kv.first)) add_row(kv.first, 0.0, 0.0, 0.0);
  add_row(static_cast<long>(i0), 1.0 - lam0 * dt, lam0, (total(r1) - lam0) / dt);

  rep.pass = true;
  for (const auto& row : rep.rows) {
    if (std::isfinite(row.deviation)) rep.max_abs_deviation = std::max(rep.max_abs_deviation, std::abs(row.deviation));
    rep.pass = rep.pass && row.pass;
  }
  return rep;
}

void simulate_hom_spine_k(const ModelSpec& model, int x0, const Counts& z0, double t, Rng& rng, HomSpineRunK& out) {
  const int D = model.dim();
  if (static_cast<int>(z0.size()) != D || x0 < 0 || x0 >= D || z0[static_cast<std::size_t>(x0)] < 1)
    throw ModelError("invalid initial spine state: need exactly one spine among z0[x0] >= 1 individuals");
  int total = 0;
  for (int v : z0) total += v;
  if (total > model.K()) throw ModelError("initial population exceeds capacity K");

  struct Ch {
    int event;
    int new_type;  // -1 for moves of the rest of the population
    double rate;
  };
  thread_local std::vector<Ch> chans;
  Counts z = z0;
  int Y = x0;
  out.path.reset(D, model.K(), t, Y, z.data());
  out.log_weight = 0.0;
  double s = 0.0;
  while (true) {
    chans.clear();
    double tot = 0.0;
    for (int e : model.events_of(Y)) {
      const double r = model.rate_counts(e, z.data());
      if (r <= 0.0) continue;
      const auto& ev = model.event(e);
      for (int y = 0; y < D; ++y)
        if (ev.offspring[static_cast<std::size_t>(y)] > 0) {
          chans.push_back({e, y, ev.offspring[static_cast<std::size_t>(y)] * r});
          tot += chans.back().rate;
        }
    }
    for (int e = 0; e < model.num_events(); ++e) {
      const auto& ev = model.event(e);
      const int mult = z[static_cast<std::size_t>(ev.parent)] - (ev.parent == Y ? 1 : 0);
      if (mult <= 0) continue;
      const double r = model.rate_counts(e, z.data());
      if (r <= 0.0) continue;
      chans.push_back({e, -1, mult * r});
      tot += chans.back().rate;
    }
    const double lam = model.lambda_counts(Y, z.data());
    const double next = tot > 0.0 ? s + rng.exponential(tot) : t;
    if (next >= t) {
      out.log_weight += lam * (t - s);
      break;
    }
    out.log_weight += lam * (next - s);
    s = next;
    double u = rng.uniform() * tot;
    std::size_t c = 0;
    while (c + 1 < chans.size() && u >= chans[c].rate) {
      u -= chans[c].rate;
      ++c;
    }
    const auto& ev = model.event(chans[c].event);
    for (int w = 0; w < D; ++w) z[static_cast<std::size_t>(w)] += ev.offspring[static_cast<std::size_t>(w)];
    --z[static_cast<std::size_t>(ev.parent)];
    if (chans[c].new_type >= 0) Y = chans[c].new_type;
    out.path.push(s, Y, z.data());
  }
}

HomSpineRunK simulate_hom_spine_k(const ModelSpec& model, int x0, const Counts& z0, double t, std::uint64_t seed) {
  HomSpineRunK out;
  Rng rng(seed, streams::kHomSpine, 0);
  simulate_hom_spine_k(model, x0, z0, t, rng, out);
  return out;
}

std::vector<Estimate> many_to_one_rhs(const ModelSpec& model, const MTable& mtab, const Counts& z0,
                                      const std::vector<Functional>& Fs, double t, std::size_t N, std::uint64_t seed) {
  const int D = model.dim();
  std::vector<double> mean(Fs.size(), 0.0), var(Fs.size(), 0.0);
  for (int x = 0; x < D; ++x) {
    const int zx = z0[static_cast<std::size_t>(x)];
    if (zx < 1) continue;
    const long i0 = mtab.index().find(x, z0);
    if (i0 < 0) throw ModelError("initial state is not in S_K");
    const double mx = mtab.m_at_index(static_cast<std::size_t>(i0), t);
    std::vector<std::vector<double>> vals(Fs.size(), std::vector<double>(N));
    std::vector<std::unique_ptr<InhomSpineSimulator>> sims(worker_count());
    std::vector<SpinePathK> paths(worker_count());
    parallel_for(N, [&](unsigned w, std::size_t k) {
      if (!sims[w]) sims[w] = std::make_unique<InhomSpineSimulator>(model, mtab, t);
      Rng rng(seed, streams::kSpine + static_cast<std::uint64_t>(x), k);
      sims[w]->run(static_cast<std::size_t>(i0), 0.0, t, rng, &paths[w]);
      const TypePath tp = paths[w].type_path();
      SpineTrack track(paths[w]);
      for (std::size_t f = 0; f < Fs.size(); ++f) vals[f][k] = Fs[f].evaluate(tp, &track);
    });
    for (std::size_t f = 0; f < Fs.size(); ++f) {
      const auto e = summarize(vals[f]);
      mean[f] += zx * mx * e.mean;
      var[f] += (zx * mx * e.se) * (zx * mx * e.se);
    }
  }
  std::vector<Estimate> out;
  for (std::size_t f = 0; f < Fs.size(); ++f) out.push_back({mean[f], std::sqrt(var[f]), N});
  return out;
}

}  // namespace spinal
