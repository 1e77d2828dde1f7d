#pragma once

#include <utility>
#include <vector>

#include "chartlab/dissimilarity.hpp"

namespace chartlab {

/// Undirected k-nearest-neighbor graph over the rows of a dissimilarity matrix.
struct KnnGraph {
  struct Edge {
    Index to;
    double weight;
  };
  std::vector<std::vector<Edge>> adjacency;  // sorted by neighbor index
  Index k = 0;
  MetricTag tag;

  Index size() const { return static_cast<Index>(adjacency.size()); }
};

/// Connects each node to its k smallest-dissimilarity neighbors (ties to the
/// lower index), then symmetrizes by union.
KnnGraph build_knn_graph(const DissimilarityMatrix& D, Index k);

/// Sizes of the connected components, largest first.
std::vector<Index> component_sizes(const KnnGraph& g);

/// Joins components by repeatedly adding the cheapest edge of D between any
/// two different components. Returns the number of edges added.
Index connect_components(KnnGraph& g, const DissimilarityMatrix& D);

/// All-pairs shortest path lengths (Dijkstra from every source). Throws
/// DataError listing component sizes when the graph is disconnected.
DissimilarityMatrix geodesic_matrix(const KnnGraph& g);

struct GeodesicOptions {
  Index k = 20;
  bool repair = false;  // join disconnected components instead of failing
};

/// build_knn_graph, optional repair, then geodesic_matrix.
DissimilarityMatrix geodesic(const DissimilarityMatrix& D, const GeodesicOptions& opt = {});

}  // namespace chartlab
