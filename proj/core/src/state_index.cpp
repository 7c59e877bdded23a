#include "spinal/state_index.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

#include "spinal/lattice.hpp"

namespace spinal {

StateIndex::StateIndex(int D, int K) : D_(D), K_(K) {
  const double space = D * std::pow(double(K + 1), D);
  if (space <= 2e7) {
    dense_ = true;
    dense_lookup_.assign(static_cast<std::size_t>(space), -1);
  }
}

std::uint64_t StateIndex::key(int x, const int* z) const {
  std::uint64_t k = 0;
  for (int i = D_ - 1; i >= 0; --i) k = k * static_cast<std::uint64_t>(K_ + 1) + static_cast<std::uint64_t>(z[i]);
  std::uint64_t stride = 1;
  for (int i = 0; i < D_; ++i) stride *= static_cast<std::uint64_t>(K_ + 1);
  return static_cast<std::uint64_t>(x) * stride + k;
}

long StateIndex::find(int x, const int* z) const {
  if (x < 0 || x >= D_) return -1;
  int total = 0;
  for (int i = 0; i < D_; ++i) {
    if (z[i] < 0) return -1;
    total += z[i];
  }
  if (total > K_ || z[x] < 1) return -1;
  const auto k = key(x, z);
  if (dense_) return dense_lookup_[k];
  auto it = sparse_lookup_.find(k);
  return it == sparse_lookup_.end() ? -1 : it->second;
}

void StateIndex::push(int x, const int* z) {
  const auto idx = static_cast<std::int32_t>(types_.size());
  const auto k = key(x, z);
  if (dense_)
    dense_lookup_[k] = idx;
  else
    sparse_lookup_.emplace(k, idx);
  types_.push_back(x);
  counts_.insert(counts_.end(), z, z + D_);
}

std::shared_ptr<const StateIndex> enumerate_states(const ModelSpec& model, std::size_t cap) {
  const int D = model.dim();
  const int K = model.K();
  // |S_K| = sum_x #{z : z_x >= 1, |z| <= K} = D * binomial(K - 1 + D, D).
  const std::uint64_t per_type = count_compositions(D, K - 1);
  if (per_type > cap || per_type * static_cast<std::uint64_t>(D) > cap)
    throw ModelError("state-space cap exceeded: |S_K| > " + std::to_string(cap));
  auto idx = std::make_shared<StateIndex>(D, K);
  for (int x = 0; x < D; ++x)
    for_each_composition(D, K, [&](const std::vector<int>& z) {
      if (z[static_cast<std::size_t>(x)] >= 1) idx->push(x, z.data());
    });
  return idx;
}

std::shared_ptr<const StateIndex> enumerate_reachable(const ModelSpec& model,
                                                      const std::vector<std::pair<int, Counts>>& seeds,
                                                      std::size_t cap) {
  const int D = model.dim();
  const int K = model.K();
  using State = std::pair<int, Counts>;
  // Type first, then colexicographic composition.
  auto less = [](const State& a, const State& b) {
    if (a.first != b.first) return a.first < b.first;
    return std::lexicographical_compare(a.second.rbegin(), a.second.rend(), b.second.rbegin(), b.second.rend());
  };
  std::set<State, decltype(less)> seen(less);
  std::deque<State> queue;
  auto visit = [&](int x, Counts z) {
    if (seen.emplace(x, z).second) {
      if (seen.size() > cap) throw ModelError("state-space cap exceeded: |S_K| > " + std::to_string(cap));
      queue.emplace_back(x, std::move(z));
    }
  };
  for (const auto& [x, z] : seeds) {
    int total = 0;
    for (int v : z) total += v;
    if (x < 0 || x >= D || static_cast<int>(z.size()) != D || z[static_cast<std::size_t>(x)] < 1 || total > K)
      throw ModelError("seed state is not in S_K");
    visit(x, z);
  }
  while (!queue.empty()) {
    auto [x, z] = queue.front();
    queue.pop_front();
    for (int e = 0; e < model.num_events(); ++e) {
      const auto& ev = model.event(e);
      const int y = ev.parent;
      if (model.rate_counts(e, z.data()) <= 0.0) continue;
      Counts nz = z;
      for (int i = 0; i < D; ++i) nz[static_cast<std::size_t>(i)] += ev.offspring[static_cast<std::size_t>(i)];
      --nz[static_cast<std::size_t>(y)];
      if (y == x) {
        for (int w = 0; w < D; ++w)
          if (ev.offspring[static_cast<std::size_t>(w)] > 0) visit(w, nz);
      }
      const int others = z[static_cast<std::size_t>(y)] - (y == x ? 1 : 0);
      if (others > 0) visit(x, nz);
    }
  }
  auto idx = std::make_shared<StateIndex>(D, K);
  for (const auto& [x, z] : seen) idx->push(x, z.data());
  return idx;
}

}  // namespace spinal
