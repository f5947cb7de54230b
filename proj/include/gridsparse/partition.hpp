#pragma once

#include "gridsparse/linalg.hpp"

#include <vector>

namespace gridsparse {

/// Grouping of measurement rows or state columns into G clusters.
struct ClusterPartition {
  enum class Axis { rows, columns };

  Axis axis = Axis::rows;
  std::vector<IndexList> groups;

  Index cluster_count() const { return static_cast<Index>(groups.size()); }

  /// Requires G >= 1 and nonempty, disjoint groups covering [0, n).
  void validate(Index n) const;

  /// Same partition with indices ascending inside each group and groups
  /// ordered by their smallest index.
  ClusterPartition canonical() const;
};

/// Contiguous blocks of floor(n/G), the first n mod G blocks one larger.
ClusterPartition partition_indices(Index n, Index G, ClusterPartition::Axis axis = ClusterPartition::Axis::rows);

}  // namespace gridsparse
