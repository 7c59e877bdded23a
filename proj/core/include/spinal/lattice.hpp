#pragma once

#include <cstdint>
#include <vector>

namespace spinal {

// Number of z in N^D with ||z||_1 <= K, i.e. binomial(K + D, D). Saturates
// at UINT64_MAX instead of overflowing.
std::uint64_t count_compositions(int D, int K);

// Calls fn(z) for every z in N^D with ||z||_1 <= K. Order: colexicographic
// (last coordinate most significant).
template <class Fn>
void for_each_composition(int D, int K, Fn&& fn) {
  std::vector<int> z(static_cast<std::size_t>(D), 0);
  int total = 0;
  while (true) {
    fn(static_cast<const std::vector<int>&>(z));
    int i = 0;
    while (i < D) {
      if (total < K) {
        ++z[static_cast<std::size_t>(i)];
        ++total;
        break;
      }
      total -= z[static_cast<std::size_t>(i)];
      z[static_cast<std::size_t>(i)] = 0;
      ++i;
    }
    if (i == D) return;
  }
}

}  // namespace spinal
