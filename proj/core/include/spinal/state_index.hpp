#pragma once

#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

#include "spinal/model.hpp"

namespace spinal {

inline constexpr std::size_t kDefaultStateCap = 500000;

// Dense numbering of states (x, z) with z_x >= 1 and ||z||_1 <= K.
// Ordering: type first, then z colexicographically.
class StateIndex {
 public:
  StateIndex(int D, int K);

  int dim() const { return D_; }
  int K() const { return K_; }
  std::size_t size() const { return types_.size(); }

  int type_of(std::size_t i) const { return types_[i]; }
  const int* counts_of(std::size_t i) const { return counts_.data() + i * static_cast<std::size_t>(D_); }
  Counts counts_vec(std::size_t i) const { return Counts(counts_of(i), counts_of(i) + D_); }

  // Index of (x, z); -1 if the state is not in the index.
  long find(int x, const int* z) const;
  long find(int x, const Counts& z) const { return find(x, z.data()); }

  // Appends a state; used by the enumerators.
  void push(int x, const int* z);

 private:
  std::uint64_t key(int x, const int* z) const;

  int D_;
  int K_;
  std::vector<int> types_;
  std::vector<int> counts_;
  bool dense_ = false;
  std::vector<std::int32_t> dense_lookup_;
  std::unordered_map<std::uint64_t, std::int32_t> sparse_lookup_;
};

// Full state space {(x, z) : z_x >= 1, ||z||_1 <= K}. Throws ModelError when
// its size exceeds cap.
std::shared_ptr<const StateIndex> enumerate_states(const ModelSpec& model, std::size_t cap = kDefaultStateCap);

// States reachable from the seeds through transitions with positive rate
// (spine moves and moves of the rest of the population), in the same order.
std::shared_ptr<const StateIndex> enumerate_reachable(const ModelSpec& model,
                                                      const std::vector<std::pair<int, Counts>>& seeds,
                                                      std::size_t cap = kDefaultStateCap);

}  // namespace spinal
