#include "gridsparse/partition.hpp"

#include "gridsparse/error.hpp"

#include <algorithm>

namespace gridsparse {

void ClusterPartition::validate(Index n) const {
  if (groups.empty()) throw ValidationError("partition: need at least one cluster");
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  Index covered = 0;
  for (const auto& g : groups) {
    if (g.empty()) throw ValidationError("partition: empty cluster");
    for (Index i : g) {
      if (i < 0 || i >= n) throw ValidationError("partition: index " + std::to_string(i) + " out of range");
      if (seen[static_cast<std::size_t>(i)]) throw ValidationError("partition: index " + std::to_string(i) + " repeated");
      seen[static_cast<std::size_t>(i)] = true;
      ++covered;
    }
  }
  if (covered != n)
    throw ValidationError("partition covers " + std::to_string(covered) + " of " + std::to_string(n) + " indices");
}

ClusterPartition ClusterPartition::canonical() const {
  ClusterPartition out = *this;
  for (auto& g : out.groups) std::sort(g.begin(), g.end());
  std::sort(out.groups.begin(), out.groups.end(), [](const IndexList& a, const IndexList& b) {
    if (a.empty() || b.empty()) return a.size() < b.size();
    return a.front() < b.front();
  });
  return out;
}

ClusterPartition partition_indices(Index n, Index G, ClusterPartition::Axis axis) {
  if (G < 1 || G > n) throw ValidationError("partition_indices: G=" + std::to_string(G) + " out of range for n=" + std::to_string(n));
  ClusterPartition out;
  out.axis = axis;
  const Index base = n / G;
  const Index extra = n % G;
  Index next = 0;
  for (Index g = 0; g < G; ++g) {
    const Index size = base + (g < extra ? 1 : 0);
    IndexList block(static_cast<std::size_t>(size));
    for (Index i = 0; i < size; ++i) block[static_cast<std::size_t>(i)] = next++;
    out.groups.push_back(std::move(block));
  }
  return out;
}

}  // namespace gridsparse
