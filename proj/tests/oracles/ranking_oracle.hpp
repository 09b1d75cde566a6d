#pragma once

#include <cstddef>
#include <vector>

// False positives by brute force: filter, then selection-sort by descending
// probability with ties kept in input order.
namespace oracle {

struct Scored {
  std::size_t index;
  double probability;
};

inline std::vector<Scored> false_positives(const std::vector<int>& gold,
                                           const std::vector<double>& probability,
                                           double threshold, std::size_t limit) {
  std::vector<Scored> pool;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] == 0 && probability[i] > threshold) pool.push_back({i, probability[i]});
  }
  std::vector<Scored> out;
  std::vector<bool> taken(pool.size(), false);
  while (out.size() < limit && out.size() < pool.size()) {
    std::size_t best = pool.size();
    for (std::size_t j = 0; j < pool.size(); ++j) {
      if (taken[j]) continue;
      if (best == pool.size() || pool[j].probability > pool[best].probability) best = j;
    }
    taken[best] = true;
    out.push_back(pool[best]);
  }
  return out;
}

}  // namespace oracle
