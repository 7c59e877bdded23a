#include <algorithm>
#include <cmath>

#include "spinal/lln.hpp"

namespace spinal {

namespace {

template <class F>
double simpson_rec(const F& f, double a, double b, double fa, double fm, double fb, double whole, double tol,
                   int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6 * (fa + 4 * flm + fm);
  const double right = (b - m) / 6 * (fm + 4 * frm + fb);
  const double diff = left + right - whole;
  if (depth <= 0 || std::abs(diff) <= 15 * tol) return left + right + diff / 15;
  return simpson_rec(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol) {
  if (b <= a) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return simpson_rec(f, a, b, fa, fm, fb, (b - a) / 6 * (fa + 4 * fm + fb), tol, 40);
}

constexpr double kBoundMargin = 1.02;

}  // namespace

LimitContext::LimitContext(const FlowBundle& flow, double t, const MCharacteristic* mchar)
    : flow_(flow), t_(t), mchar_(mchar) {
  if (!(t >= 0.0) || t > flow.horizon() * (1 + 1e-12)) throw ModelError("limit horizon exceeds the flow");
  if (mchar && std::abs(mchar->horizon() - t) > 1e-12 * std::max(1.0, t))
    throw ModelError("characteristic horizon differs from the spine horizon");
  const auto& model = flow.model();
  const int D = model.dim();
  channels_.resize(static_cast<std::size_t>(D));
  bounds_.assign(static_cast<std::size_t>(D), 0.0);
  for (int x = 0; x < D; ++x)
    for (int e : model.events_of(x)) {
      const auto& ev = model.event(e);
      for (int y = 0; y < D; ++y) {
        const int ky = ev.offspring[static_cast<std::size_t>(y)];
        if (ky == 0) continue;
        const double b = ky * ev.rate.sup_bound();
        if (b <= 0.0) continue;
        channels_[static_cast<std::size_t>(x)].push_back({e, y, ky, b});
        bounds_[static_cast<std::size_t>(x)] += b;
      }
    }
  const std::size_t M = t > 0 ? 256 : 1;
  cum_grid_.resize(M + 1);
  for (std::size_t i = 0; i <= M; ++i) cum_grid_[i] = t * double(i) / double(M);
  cum_.assign(static_cast<std::size_t>(D), std::vector<double>(M + 1, 0.0));
  for (int x = 0; x < D; ++x)
    for (std::size_t i = 0; i < M; ++i)
      cum_[static_cast<std::size_t>(x)][i + 1] = cum_[static_cast<std::size_t>(x)][i] + lambda_integral(x, cum_grid_[i], cum_grid_[i + 1]);
}

double LimitContext::lambda_integral(int x, double a, double b) const {
  const auto& model = flow_.model();
  std::vector<double> z(static_cast<std::size_t>(model.dim()));
  auto lam = [&](double s) {
    flow_.z_at(s, z.data());
    return model.lambda_normalized(x, z.data());
  };
  return adaptive_simpson(lam, a, b, 1e-14 * std::max(1.0, b - a));
}

double LimitContext::cumulative_lambda(int x, double s) const {
  if (s <= 0.0) return 0.0;
  s = std::min(s, t_);
  const std::size_t M = cum_grid_.size() - 1;
  const auto i = std::min<std::size_t>(M - 1, static_cast<std::size_t>(s / t_ * double(M)));
  return cum_[static_cast<std::size_t>(x)][i] + lambda_integral(x, cum_grid_[i], s);
}

void simulate_limit_spine(const LimitContext& ctx, int x0, Rng& rng, TypePath& out) {
  const MCharacteristic* mc = ctx.mchar();
  if (!mc) throw ModelError("limit spine needs the characteristic solution");
  const auto& model = ctx.flow().model();
  const double t = ctx.horizon();
  if (x0 < 0 || x0 >= model.dim()) throw ModelError("unknown initial type");
  out.reset(x0, t);
  const auto& grid = mc->sigma_grid();
  if (t <= 0.0 || grid.size() < 2) return;

  thread_local std::vector<double> z, rates;
  z.resize(static_cast<std::size_t>(model.dim()));
  int x = x0;
  double s = 0.0;
  std::size_t j = grid.size() - 2;  // sigma-cell containing t - s
  while (true) {
    const double seg_end = t - grid[j];
    bool moved = false;
    while (!moved) {
      const auto& chans = ctx.channels(x);
      const double umin = std::min(mc->node_value(j, x), mc->node_value(j + 1, x));
      double bound = 0.0;
      for (const auto& ch : chans)
        bound += ch.bound * std::max(mc->node_value(j, ch.y), mc->node_value(j + 1, ch.y));
      bound *= kBoundMargin / umin;
      bool jumped = false;
      while (!jumped) {
        const double next = bound > 0.0 ? s + rng.exponential(bound) : seg_end;
        if (next >= seg_end) {
          s = seg_end;
          moved = true;
          break;
        }
        s = next;
        const double sigma = t - s;
        ctx.flow().z_at(s, z.data());
        const double ux = mc->u_in_cell(x, j, sigma);
        rates.resize(chans.size());
        double total = 0.0;
        for (std::size_t c = 0; c < chans.size(); ++c) {
          const auto& ch = chans[c];
          rates[c] = model.rate_normalized(ch.event, z.data()) * ch.ky * mc->u_in_cell(ch.y, j, sigma) / ux;
          total += rates[c];
        }
        if (total > bound) throw ModelError("thinning bound violated in limit spine");
        double u = rng.uniform() * bound;
        if (u >= total) continue;
        std::size_t c = 0;
        while (c + 1 < chans.size() && u >= rates[c]) {
          u -= rates[c];
          ++c;
        }
        x = chans[c].y;
        out.jump(s, x);
        jumped = true;
      }
    }
    if (j == 0) break;
    --j;
  }
}

TypePath simulate_limit_spine(const LimitContext& ctx, int x0, std::uint64_t seed) {
  Rng rng(seed, streams::kLimitSpine, 0);
  TypePath p;
  simulate_limit_spine(ctx, x0, rng, p);
  return p;
}

double WeightedHomPath::weight() const { return std::exp(log_weight); }

void simulate_weighted_hom_limit(const LimitContext& ctx, int x0, Rng& rng, WeightedHomPath& out) {
  const auto& model = ctx.flow().model();
  const double t = ctx.horizon();
  if (x0 < 0 || x0 >= model.dim()) throw ModelError("unknown initial type");
  out.path.reset(x0, t);
  out.log_weight = 0.0;
  thread_local std::vector<double> z, rates;
  z.resize(static_cast<std::size_t>(model.dim()));
  int x = x0;
  double s = 0.0, seg_start = 0.0;
  while (true) {
    const auto& chans = ctx.channels(x);
    const double bound = ctx.channel_bound(x);
    const double next = bound > 0.0 ? s + rng.exponential(bound) : t;
    if (next >= t) break;
    s = next;
    ctx.flow().z_at(s, z.data());
    rates.resize(chans.size());
    double total = 0.0;
    for (std::size_t c = 0; c < chans.size(); ++c) {
      rates[c] = chans[c].ky * model.rate_normalized(chans[c].event, z.data());
      total += rates[c];
    }
    if (total > bound * (1 + 1e-12)) throw ModelError("thinning bound violated in homogeneous limit spine");
    double u = rng.uniform() * bound;
    if (u >= total) continue;
    std::size_t c = 0;
    while (c + 1 < chans.size() && u >= rates[c]) {
      u -= rates[c];
      ++c;
    }
    if (chans[c].y == x) continue;
    out.log_weight += ctx.cumulative_lambda(x, s) - ctx.cumulative_lambda(x, seg_start);
    seg_start = s;
    x = chans[c].y;
    out.path.jump(s, x);
  }
  out.log_weight += ctx.cumulative_lambda(x, t) - ctx.cumulative_lambda(x, seg_start);
}

WeightedHomPath simulate_weighted_hom_limit(const LimitContext& ctx, int x0, std::uint64_t seed) {
  Rng rng(seed, streams::kWeighted, 0);
  WeightedHomPath p;
  simulate_weighted_hom_limit(ctx, x0, rng, p);
  return p;
}

Counts floor_composition(const std::vector<double>& z, int K) {
  Counts c(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) c[i] = static_cast<int>(std::floor(z[i] * K + 1e-9));
  return c;
}

std::vector<double> StarPath::star_at(double s) const {
  const std::size_t i = proj.jump_index(s);
  const int D = proj.D;
  std::vector<double> out(static_cast<std::size_t>(2 * D), 0.0);
  const int* c = proj.counts_at_jump(i);
  for (int x = 0; x < D; ++x) out[static_cast<std::size_t>(x)] = double(c[x]) / proj.K;
  const int y = proj.types[i];
  out[static_cast<std::size_t>(y)] -= 1.0 / proj.K;
  out[static_cast<std::size_t>(D + y)] = 1.0 / proj.K;
  return out;
}

StarPath simulate_hom_spine_star(const ModelSpec& model, int K, const std::vector<double>& z0, int x0, double t,
                                 std::uint64_t seed) {
  const ModelSpec mk = model.K() == K ? model : model.with_capacity(K);
  const Counts c = floor_composition(z0, K);
  if (x0 < 0 || x0 >= model.dim() || c[static_cast<std::size_t>(x0)] < 1)
    throw ModelError("invalid initial state: floor(K z0) has no individual of the spine type");
  HomSpineRunK run;
  Rng rng(seed, streams::kHomSpine, 0);
  simulate_hom_spine_k(mk, x0, c, t, rng, run);
  return StarPath{std::move(run.path)};
}

}  // namespace spinal
