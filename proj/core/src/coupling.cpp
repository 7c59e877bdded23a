#include <algorithm>
#include <cmath>

#include "spinal/lln.hpp"
#include "spinal/parallel.hpp"

namespace spinal {

namespace {

struct Proposal {
  int type;     // spine type owning the channel
  std::size_t channel;
  double theta;  // uniform on [0, channel bound]
};

// Picks one spine channel of type x proportionally to its bound.
Proposal draw_channel(const LimitContext& ctx, int x, Rng& rng) {
  const auto& chans = ctx.channels(x);
  double u = rng.uniform() * ctx.channel_bound(x);
  std::size_t c = 0;
  while (c + 1 < chans.size() && u >= chans[c].bound) {
    u -= chans[c].bound;
    ++c;
  }
  return {x, c, rng.uniform() * chans[c].bound};
}

}  // namespace

CouplingResult couple_spines(const ModelSpec& model_K, const FlowBundle& flow, int x0, double t, Rng& rng,
                             const CouplingOptions& opt) {
  const int D = model_K.dim();
  const int K = model_K.K();
  if (flow.dim() != D) throw ModelError("flow and model differ in dimension");
  if (x0 < 0 || x0 >= D) throw ModelError("unknown initial type");
  const LimitContext ctx(flow, t);
  Counts c = floor_composition(flow.z0(), K);
  if (c[static_cast<std::size_t>(x0)] < 1)
    throw ModelError("invalid initial state: floor(K z0) has no individual of the spine type");

  CouplingResult res;
  res.finite_path.reset(x0, t);
  res.limit_path.reset(x0, t);
  int Y = x0, U = x0;
  double s = 0.0;
  std::vector<double> z(static_cast<std::size_t>(D));
  std::vector<double> others;  // non-spine rates per event
  others.resize(static_cast<std::size_t>(model_K.num_events()));

  auto deviation = [&](double at) {
    flow.z_at(std::min(at, t), z.data());
    double d = 0.0;
    for (int i = 0; i < D; ++i) d += std::abs(double(c[static_cast<std::size_t>(i)]) / K - z[static_cast<std::size_t>(i)]);
    res.sup_deviation = std::max(res.sup_deviation, d);
  };
  auto diverge = [&](double at) {
    if (res.paths_equal) {
      res.paths_equal = false;
      res.first_divergence = at;
    }
  };
  auto apply_event = [&](int e) {
    const auto& ev = model_K.event(e);
    for (int w = 0; w < D; ++w) c[static_cast<std::size_t>(w)] += ev.offspring[static_cast<std::size_t>(w)];
    --c[static_cast<std::size_t>(ev.parent)];
  };

  deviation(0.0);
  while (true) {
    double other_total = 0.0;
    for (int e = 0; e < model_K.num_events(); ++e) {
      const auto& ev = model_K.event(e);
      const int mult = c[static_cast<std::size_t>(ev.parent)] - (ev.parent == Y ? 1 : 0);
      const double r = mult > 0 ? mult * model_K.rate_counts(e, c.data()) : 0.0;
      others[static_cast<std::size_t>(e)] = r;
      other_total += r;
    }
    const bool joint = Y == U;
    const double bY = ctx.channel_bound(Y);
    const double bU = joint ? 0.0 : ctx.channel_bound(U);
    const double total = other_total + bY + bU;
    const double next = total > 0.0 ? s + rng.exponential(total) : t;
    if (next >= t) break;
    s = next;
    deviation(s);
    double pick = rng.uniform() * total;
    if (pick < other_total) {
      int e = 0;
      while (e + 1 < model_K.num_events() && pick >= others[static_cast<std::size_t>(e)]) {
        pick -= others[static_cast<std::size_t>(e)];
        ++e;
      }
      apply_event(e);
      deviation(s);
      continue;
    }
    pick -= other_total;
    const int owner = pick < bY ? Y : U;
    const Proposal p = draw_channel(ctx, owner, rng);
    const auto& ch = ctx.channels(owner)[p.channel];
    flow.z_at(s, z.data());
    const double limit_rate = ch.ky * model_K.rate_normalized(ch.event, z.data());
    const double finite_rate =
        opt.force_limit_rates ? limit_rate : ch.ky * model_K.rate_counts(ch.event, c.data());
    const bool acc_limit = owner == U && p.theta <= limit_rate;
    const bool acc_finite = owner == Y && p.theta <= finite_rate;
    if (acc_finite) {
      apply_event(ch.event);
      Y = ch.y;
      res.finite_path.jump(s, Y);
    }
    if (acc_limit) {
      U = ch.y;
      res.limit_path.jump(s, U);
    }
    if (Y != U) diverge(s);
    deviation(s);
  }
  deviation(t);
  if (!opt.record_paths) {
    res.finite_path = TypePath{};
    res.limit_path = TypePath{};
  }
  return res;
}

DeviationSummary estimate_sup_deviation(const ModelSpec& model, int K, const std::vector<double>& z0, int x0,
                                        double t, std::size_t N, std::uint64_t seed) {
  const ModelSpec mk = model.K() == K ? model : model.with_capacity(K);
  const FlowBundle flow(model, z0, t);
  std::vector<double> dev(N), eq(N);
  parallel_for(N, [&](unsigned, std::size_t i) {
    Rng rng(seed, streams::kCoupling, i);
    const auto r = couple_spines(mk, flow, x0, t, rng);
    dev[i] = r.sup_deviation;
    eq[i] = r.paths_equal ? 1.0 : 0.0;
  });
  return {summarize(dev), summarize(eq)};
}

}  // namespace spinal
