#pragma once

#include "nomad/cgm.hpp"
#include "nomad/datasets.hpp"
#include "nomad/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nomad {

struct EmbeddingResult {
  /// n x m; column k is the k-th eigenvector scaled by sqrt(eigenvalue).
  Matrix coords;
  Vector eigenvalues_used;
};

/// Top-m eigenvectors of Q, sqrt(lambda)-scaled, eigenvalues clipped at 0.
inline EmbeddingResult spectral_embedding(const SymMatrix& q, Index m) {
  const Index n = q.n();
  if (m < 1 || m > n) {
    throw std::invalid_argument("spectral_embedding: m = " + std::to_string(m) +
                                " outside [1, " + std::to_string(n) + "]");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(q.mat());
  EmbeddingResult out;
  out.coords.resize(n, m);
  out.eigenvalues_used.resize(m);
  for (Index k = 0; k < m; ++k) {
    const Index col = n - 1 - k;
    const double lam = std::max(es.eigenvalues()(col), 0.0);
    out.eigenvalues_used(k) = lam;
    out.coords.col(k) = std::sqrt(lam) * es.eigenvectors().col(col);
  }
  return out;
}

namespace detail {

struct UnionFind {
  std::vector<Index> parent;
  explicit UnionFind(Index n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), Index{0});
  }
  Index find(Index x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      auto& p = parent[static_cast<std::size_t>(x)];
      p = parent[static_cast<std::size_t>(p)];
      x = p;
    }
    return x;
  }
  void unite(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
};

}  // namespace detail

/// Connected components of the graph with edges Q_ij > edge_threshold.
/// Labels run 0..c-1 by decreasing component size, ties by smallest member.
inline std::vector<int> manifold_components(const SymMatrix& q, double edge_threshold) {
  const Index n = q.n();
  detail::UnionFind uf(n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = j + 1; i < n; ++i) {
      if (q(i, j) > edge_threshold) uf.unite(i, j);
    }
  }
  std::vector<Index> root(static_cast<std::size_t>(n));
  std::vector<Index> size(static_cast<std::size_t>(n), 0);
  for (Index i = 0; i < n; ++i) {
    root[static_cast<std::size_t>(i)] = uf.find(i);
    ++size[static_cast<std::size_t>(root[static_cast<std::size_t>(i)])];
  }
  std::vector<Index> roots;
  for (Index i = 0; i < n; ++i) {
    if (root[static_cast<std::size_t>(i)] == i) roots.push_back(i);
  }
  std::stable_sort(roots.begin(), roots.end(), [&](Index a, Index b) {
    return size[static_cast<std::size_t>(a)] > size[static_cast<std::size_t>(b)];
  });
  std::vector<int> label_of_root(static_cast<std::size_t>(n), -1);
  for (std::size_t k = 0; k < roots.size(); ++k) {
    label_of_root[static_cast<std::size_t>(roots[k])] = static_cast<int>(k);
  }
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    labels[static_cast<std::size_t>(i)] =
        label_of_root[static_cast<std::size_t>(root[static_cast<std::size_t>(i)])];
  }
  return labels;
}

/// Misassigned points between two labelings under the best one-to-one
/// matching of label values (greedy by overlap, adequate for few labels).
inline int labeling_errors(const std::vector<int>& truth, const std::vector<int>& found) {
  if (truth.size() != found.size()) throw std::invalid_argument("labeling_errors: size mismatch");
  const int nt = truth.empty() ? 0 : *std::max_element(truth.begin(), truth.end()) + 1;
  const int nf = found.empty() ? 0 : *std::max_element(found.begin(), found.end()) + 1;
  std::vector<std::vector<int>> overlap(static_cast<std::size_t>(nt),
                                        std::vector<int>(static_cast<std::size_t>(nf), 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++overlap[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(found[i])];
  }
  std::vector<bool> used_t(static_cast<std::size_t>(nt), false);
  std::vector<bool> used_f(static_cast<std::size_t>(nf), false);
  int matched = 0;
  for (int round = 0; round < std::min(nt, nf); ++round) {
    int best = -1;
    int bt = 0;
    int bf = 0;
    for (int t = 0; t < nt; ++t) {
      for (int f = 0; f < nf; ++f) {
        if (!used_t[static_cast<std::size_t>(t)] && !used_f[static_cast<std::size_t>(f)] &&
            overlap[static_cast<std::size_t>(t)][static_cast<std::size_t>(f)] > best) {
          best = overlap[static_cast<std::size_t>(t)][static_cast<std::size_t>(f)];
          bt = t;
          bf = f;
        }
      }
    }
    used_t[static_cast<std::size_t>(bt)] = true;
    used_f[static_cast<std::size_t>(bf)] = true;
    matched += best;
  }
  return static_cast<int>(truth.size()) - matched;
}

/// Recursive NOMAD: D_1 = X X^T (points as rows), D_{l+1} = Q_l.
inline std::vector<SolveReport> multilayer_nomad(const Matrix& points,
                                                 const std::vector<double>& k_schedule,
                                                 const CgmConfig& config) {
  if (k_schedule.empty()) throw std::invalid_argument("multilayer_nomad: empty schedule");
  for (std::size_t l = 1; l < k_schedule.size(); ++l) {
    if (k_schedule[l] > k_schedule[l - 1]) {
      throw std::invalid_argument("multilayer_nomad: schedule must be non-increasing (K_" +
                                  std::to_string(l + 1) + " > K_" + std::to_string(l) + ")");
    }
  }
  std::vector<SolveReport> layers;
  SymMatrix d = gramian(points);
  for (double k : k_schedule) {
    layers.push_back(solve_nomad_cgm(SdpProblem(d, k), config));
    d = layers.back().Q;
  }
  return layers;
}

/// d_ij = Q_ii + Q_jj - 2 Q_ij.
inline SymMatrix similarity_to_distance(const SymMatrix& q) {
  const Index n = q.n();
  Matrix d(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) d(i, j) = i == j ? 0.0 : q(i, i) + q(j, j) - 2.0 * q(i, j);
  }
  return SymMatrix(std::move(d));
}

/// Euclidean distances between rows.
inline SymMatrix pairwise_distances(const Matrix& points) {
  detail::check_finite_points(points);
  const Index n = points.rows();
  Matrix d(n, n);
  for (Index j = 0; j < n; ++j) {
    d(j, j) = 0.0;
    for (Index i = j + 1; i < n; ++i) {
      const double v = (points.row(i) - points.row(j)).norm();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return SymMatrix(std::move(d));
}

/// Weighted undirected graph as adjacency lists.
struct Graph {
  std::vector<std::vector<std::pair<Index, double>>> adj;
  Index n() const { return static_cast<Index>(adj.size()); }
};

/// Symmetrized N-nearest-neighbor graph: i ~ j when either is among the
/// other's N nearest (ties by index); edge weight is the distance.
inline Graph knn_graph(const SymMatrix& dist, int n_neighbors) {
  const Index n = dist.n();
  if (n_neighbors < 1 || n_neighbors >= n) {
    throw std::invalid_argument("knn_graph: N = " + std::to_string(n_neighbors) +
                                " must be in [1, n - 1] with n = " + std::to_string(n));
  }
  std::vector<std::vector<char>> edge(static_cast<std::size_t>(n),
                                      std::vector<char>(static_cast<std::size_t>(n), 0));
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return dist(i, a) < dist(i, b); });
    int taken = 0;
    for (Index j : order) {
      if (taken == n_neighbors) break;
      if (j == i) continue;
      edge[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = 1;
      edge[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = 1;
      ++taken;
    }
  }
  Graph g;
  g.adj.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (edge[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) {
        g.adj[static_cast<std::size_t>(i)].emplace_back(j, dist(i, j));
      }
    }
  }
  return g;
}

/// Graph on the significant entries of Q, weighted by Q_ii + Q_jj - 2 Q_ij.
/// An entry is significant when it reaches `significance` times the maximum
/// of row i or of row j. Approximate solvers leave a positive residue on the
/// order of the constraint violation in every entry, so a near-zero cut
/// would connect all pairs.
inline Graph q_graph(const SymMatrix& q, double significance = 0.1) {
  if (!(significance > 0.0) || significance > 1.0) {
    throw std::invalid_argument("q_graph: significance must be in (0, 1]");
  }
  const Index n = q.n();
  const Vector row_max = q.mat().rowwise().maxCoeff();
  const SymMatrix d = similarity_to_distance(q);
  Graph g;
  g.adj.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const double v = q(i, j);
      if (i != j && v > 0.0 && (v >= significance * row_max(i) || v >= significance * row_max(j))) {
        g.adj[static_cast<std::size_t>(i)].emplace_back(j, std::max(d(i, j), 0.0));
      }
    }
  }
  return g;
}

/// All-pairs shortest paths by Dijkstra from every source; +inf when
/// unreachable.
inline Matrix all_pairs_geodesic(const Graph& g) {
  const Index n = g.n();
  const double inf = std::numeric_limits<double>::infinity();
  Matrix out = Matrix::Constant(n, n, inf);
  using Item = std::pair<double, Index>;
  for (Index s = 0; s < n; ++s) {
    auto dist = out.col(s);
    dist(s) = 0.0;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    heap.emplace(0.0, s);
    while (!heap.empty()) {
      const auto [du, u] = heap.top();
      heap.pop();
      if (du > dist(u)) continue;
      for (const auto& [v, w] : g.adj[static_cast<std::size_t>(u)]) {
        const double nd = du + w;
        if (nd < dist(v)) {
          dist(v) = nd;
          heap.emplace(nd, v);
        }
      }
    }
  }
  // symmetrize against floating-point path-order differences
  for (Index j = 0; j < n; ++j) {
    for (Index i = j + 1; i < n; ++i) {
      const double v = std::min(out(i, j), out(j, i));
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

struct PairRank {
  Index i = 0;
  Index j = 0;
  double length = 0.0;
};

/// Unordered pairs i < j sorted ascending by length; +inf last; ties by
/// (i, j).
inline std::vector<PairRank> rank_pairs(const Matrix& lengths) {
  const Index n = lengths.rows();
  std::vector<PairRank> pairs;
  pairs.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) pairs.push_back({i, j, lengths(i, j)});
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const PairRank& a, const PairRank& b) { return a.length < b.length; });
  return pairs;
}

/// Geodesic ranking from points: N-NN graph on Euclidean distances.
inline std::vector<PairRank> geodesic_ranking(const Matrix& points, int n_neighbors) {
  return rank_pairs(all_pairs_geodesic(knn_graph(pairwise_distances(points), n_neighbors)));
}

/// Geodesic ranking from a precomputed distance matrix.
inline std::vector<PairRank> geodesic_ranking(const SymMatrix& distances, int n_neighbors) {
  return rank_pairs(all_pairs_geodesic(knn_graph(distances, n_neighbors)));
}

/// Geodesic ranking on the NOMAD graph of Q.
inline std::vector<PairRank> nomad_geodesic_ranking(const SymMatrix& q, double significance = 0.1) {
  return rank_pairs(all_pairs_geodesic(q_graph(q, significance)));
}

struct BullseyeReport {
  std::vector<double> percentiles;
  std::vector<double> scores;
  int n_neighbors = 0;
};

/// Fraction of the top-p% pairs of `test` that are also in the top-p% of
/// `ground`, for each p. The top set holds round(p/100 * pairs) pairs.
inline BullseyeReport bullseye_score(const std::vector<PairRank>& ground,
                                     const std::vector<PairRank>& test,
                                     const std::vector<double>& percentiles, int n_neighbors = 0) {
  if (ground.size() != test.size()) {
    throw std::invalid_argument("bullseye_score: rankings cover different pair sets");
  }
  Index n = 0;
  for (const auto& p : ground) n = std::max(n, p.j + 1);
  {
    std::vector<char> seen(static_cast<std::size_t>(n * n), 0);
    for (const auto& p : ground) seen[static_cast<std::size_t>(p.i * n + p.j)] = 1;
    for (const auto& p : test) {
      if (p.j >= n || !seen[static_cast<std::size_t>(p.i * n + p.j)]) {
        throw std::invalid_argument("bullseye_score: rankings cover different pair sets");
      }
    }
  }
  BullseyeReport rep;
  rep.percentiles = percentiles;
  rep.n_neighbors = n_neighbors;
  const double total = static_cast<double>(ground.size());
  std::vector<char> in_ground(static_cast<std::size_t>(n * n), 0);
  for (double p : percentiles) {
    if (!(p > 0.0) || p > 100.0) throw std::invalid_argument("bullseye_score: p must be in (0, 100]");
    const auto top = static_cast<std::size_t>(std::llround(p / 100.0 * total));
    std::fill(in_ground.begin(), in_ground.end(), 0);
    for (std::size_t k = 0; k < top; ++k) {
      in_ground[static_cast<std::size_t>(ground[k].i * n + ground[k].j)] = 1;
    }
    std::size_t hit = 0;
    for (std::size_t k = 0; k < top; ++k) {
      hit += in_ground[static_cast<std::size_t>(test[k].i * n + test[k].j)];
    }
    rep.scores.push_back(top == 0 ? 1.0 : static_cast<double>(hit) / static_cast<double>(top));
  }
  return rep;
}

/// Hard-clustering matrix: Q_ij = 1/|C_k| when i, j both lie in cluster k.
inline SymMatrix partition_to_Q(const std::vector<int>& partition) {
  const Index n = static_cast<Index>(partition.size());
  if (n < 1) throw std::invalid_argument("partition_to_Q: empty partition");
  const int k = *std::max_element(partition.begin(), partition.end()) + 1;
  std::vector<int> size(static_cast<std::size_t>(k), 0);
  for (int c : partition) {
    if (c < 0) throw std::invalid_argument("partition_to_Q: negative cluster id");
    ++size[static_cast<std::size_t>(c)];
  }
  Matrix q = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const int c = partition[static_cast<std::size_t>(i)];
      if (c == partition[static_cast<std::size_t>(j)]) {
        q(i, j) = 1.0 / static_cast<double>(size[static_cast<std::size_t>(c)]);
      }
    }
  }
  return SymMatrix(std::move(q));
}

struct KmeansResult {
  std::vector<int> partition;
  Matrix centers;
  /// Sum of squared distances to the assigned center.
  double inertia = 0.0;
};

/// Lloyd's algorithm with farthest-point seeding. Restart r seeds its first
/// center at a point drawn from (seed, r); the best inertia is kept. Empty
/// clusters are re-seeded at the point farthest from its center.
inline KmeansResult lloyd_kmeans(const Matrix& points, int k, std::uint64_t seed,
                                 int restarts = 10, int max_iter = 300) {
  detail::check_finite_points(points);
  const Index n = points.rows();
  if (k < 1 || k > n) {
    throw std::invalid_argument("lloyd_kmeans: K = " + std::to_string(k) + " outside [1, " +
                                std::to_string(n) + "]");
  }
  KmeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);
  for (int rs = 0; rs < std::max(restarts, 1); ++rs) {
    Matrix centers(k, points.cols());
    std::uniform_int_distribution<Index> pick(0, n - 1);
    centers.row(0) = points.row(pick(rng));
    Vector mind = Vector::Constant(n, std::numeric_limits<double>::infinity());
    for (int c = 1; c < k; ++c) {
      for (Index i = 0; i < n; ++i) {
        mind(i) = std::min(mind(i), (points.row(i) - centers.row(c - 1)).squaredNorm());
      }
      Index far = 0;
      mind.maxCoeff(&far);
      centers.row(c) = points.row(far);
    }
    std::vector<int> part(static_cast<std::size_t>(n), -1);
    double inertia = 0.0;
    for (int it = 0; it < max_iter; ++it) {
      bool changed = false;
      inertia = 0.0;
      Vector own(n);
      for (Index i = 0; i < n; ++i) {
        int arg = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
          const double dd = (points.row(i) - centers.row(c)).squaredNorm();
          if (dd < bd) {
            bd = dd;
            arg = c;
          }
        }
        own(i) = bd;
        inertia += bd;
        if (part[static_cast<std::size_t>(i)] != arg) {
          part[static_cast<std::size_t>(i)] = arg;
          changed = true;
        }
      }
      std::vector<int> count(static_cast<std::size_t>(k), 0);
      Matrix sums = Matrix::Zero(k, points.cols());
      for (Index i = 0; i < n; ++i) {
        ++count[static_cast<std::size_t>(part[static_cast<std::size_t>(i)])];
        sums.row(part[static_cast<std::size_t>(i)]) += points.row(i);
      }
      for (int c = 0; c < k; ++c) {
        if (count[static_cast<std::size_t>(c)] == 0) {
          Index far = 0;
          own.maxCoeff(&far);
          own(far) = 0.0;
          --count[static_cast<std::size_t>(part[static_cast<std::size_t>(far)])];
          sums.row(part[static_cast<std::size_t>(far)]) -= points.row(far);
          part[static_cast<std::size_t>(far)] = c;
          count[static_cast<std::size_t>(c)] = 1;
          sums.row(c) = points.row(far);
          changed = true;
        }
      }
      for (int c = 0; c < k; ++c) {
        if (count[static_cast<std::size_t>(c)] > 0) {
          centers.row(c) = sums.row(c) / static_cast<double>(count[static_cast<std::size_t>(c)]);
        }
      }
      if (!changed) break;
    }
    // final inertia against the final centers
    inertia = 0.0;
    for (Index i = 0; i < n; ++i) {
      inertia += (points.row(i) - centers.row(part[static_cast<std::size_t>(i)])).squaredNorm();
    }
    if (inertia < best.inertia) {
      best.inertia = inertia;
      best.partition = part;
      best.centers = centers;
    }
  }
  return best;
}

}  // namespace nomad
