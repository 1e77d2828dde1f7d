#include "chartlab/geodesic.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>
#include <string>

#include "chartlab/parallel.hpp"

namespace chartlab {
namespace {

void add_edge(KnnGraph& g, Index a, Index b, double w) {
  auto insert = [&](Index from, Index to) {
    auto& adj = g.adjacency[static_cast<std::size_t>(from)];
    auto it = std::lower_bound(adj.begin(), adj.end(), to,
                               [](const KnnGraph::Edge& e, Index v) { return e.to < v; });
    if (it == adj.end() || it->to != to) adj.insert(it, {to, w});
  };
  insert(a, b);
  insert(b, a);
}

std::vector<Index> component_labels(const KnnGraph& g, Index& count) {
  const Index n = g.size();
  std::vector<Index> label(static_cast<std::size_t>(n), -1);
  std::vector<Index> stack;
  count = 0;
  for (Index s = 0; s < n; ++s) {
    if (label[static_cast<std::size_t>(s)] >= 0) continue;
    label[static_cast<std::size_t>(s)] = count;
    stack.push_back(s);
    while (!stack.empty()) {
      const Index u = stack.back();
      stack.pop_back();
      for (const auto& e : g.adjacency[static_cast<std::size_t>(u)])
        if (label[static_cast<std::size_t>(e.to)] < 0) {
          label[static_cast<std::size_t>(e.to)] = count;
          stack.push_back(e.to);
        }
    }
    ++count;
  }
  return label;
}

}  // namespace

KnnGraph build_knn_graph(const DissimilarityMatrix& D, Index k) {
  const Index L = D.size();
  if (k < 1 || k >= L)
    throw std::invalid_argument("k = " + std::to_string(k) + " must satisfy 1 <= k < L = " + std::to_string(L));
  KnnGraph g;
  g.k = k;
  g.tag = D.tag;
  g.adjacency.resize(static_cast<std::size_t>(L));

  std::vector<std::vector<Index>> nearest(static_cast<std::size_t>(L));
  parallel_for(0, L, [&](Index i) {
    std::vector<Index> idx;
    idx.reserve(static_cast<std::size_t>(L - 1));
    for (Index j = 0; j < L; ++j)
      if (j != i) idx.push_back(j);
    auto closer = [&](Index a, Index b) { return D(i, a) < D(i, b) || (D(i, a) == D(i, b) && a < b); };
    std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), closer);
    idx.resize(static_cast<std::size_t>(k));
    nearest[static_cast<std::size_t>(i)] = std::move(idx);
  });
  for (Index i = 0; i < L; ++i)
    for (Index j : nearest[static_cast<std::size_t>(i)]) add_edge(g, i, j, D(i, j));
  return g;
}

std::vector<Index> component_sizes(const KnnGraph& g) {
  Index count = 0;
  const auto label = component_labels(g, count);
  std::vector<Index> sizes(static_cast<std::size_t>(count), 0);
  for (Index c : label) ++sizes[static_cast<std::size_t>(c)];
  std::sort(sizes.rbegin(), sizes.rend());
  return sizes;
}

Index connect_components(KnnGraph& g, const DissimilarityMatrix& D) {
  if (D.size() != g.size()) throw std::invalid_argument("graph and matrix sizes differ");
  Index added = 0;
  for (;;) {
    Index count = 0;
    const auto label = component_labels(g, count);
    if (count <= 1) return added;
    Index bi = -1, bj = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < g.size(); ++i)
      for (Index j = i + 1; j < g.size(); ++j)
        if (label[static_cast<std::size_t>(i)] != label[static_cast<std::size_t>(j)] && D(i, j) < best) {
          best = D(i, j);
          bi = i;
          bj = j;
        }
    add_edge(g, bi, bj, best);
    ++added;
  }
}

DissimilarityMatrix geodesic_matrix(const KnnGraph& g) {
  const Index L = g.size();
  const auto sizes = component_sizes(g);
  if (sizes.size() > 1) {
    std::string list;
    for (std::size_t c = 0; c < sizes.size() && c < 10; ++c) list += (c ? ", " : "") + std::to_string(sizes[c]);
    if (sizes.size() > 10) list += ", ...";
    throw DataError("k-NN graph is disconnected: " + std::to_string(sizes.size()) + " components of sizes " +
                    list + "; increase k or enable repair");
  }

  Eigen::MatrixXd dist(L, L);
  parallel_for(0, L, [&](Index s) {
    using Item = std::pair<double, Index>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
    auto row = dist.col(s);  // column s holds distances from source s
    row.setConstant(std::numeric_limits<double>::infinity());
    row(s) = 0;
    heap.push({0.0, s});
    while (!heap.empty()) {
      const auto [d, u] = heap.top();
      heap.pop();
      if (d > row(u)) continue;
      for (const auto& e : g.adjacency[static_cast<std::size_t>(u)]) {
        const double nd = d + e.weight;
        if (nd < row(e.to)) {
          row(e.to) = nd;
          heap.push({nd, e.to});
        }
      }
    }
  });

  DissimilarityMatrix out;
  out.values = dist.cwiseMin(dist.transpose());
  out.values.diagonal().setZero();
  out.tag = g.tag;
  out.tag.geodesic = true;
  return out;
}

DissimilarityMatrix geodesic(const DissimilarityMatrix& D, const GeodesicOptions& opt) {
  KnnGraph g = build_knn_graph(D, opt.k);
  if (opt.repair) connect_components(g, D);
  return geodesic_matrix(g);
}

}  // namespace chartlab
