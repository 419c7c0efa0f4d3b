#include "storynet/centrality.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <stdexcept>

namespace storynet {

namespace {

struct WeightedNeighbor {
  std::size_t to;
  double length;
};

using Graph = std::vector<std::vector<WeightedNeighbor>>;

Graph build_graph(const NetworkSlice& slice, std::optional<PathLength> lengths) {
  Graph g(slice.order());
  for (const Edge& e : slice.edges) {
    double len = 1.0;
    if (lengths == PathLength::InverseNormalized) len = 1.0 / e.norm_weight;
    if (lengths == PathLength::InverseRaw) len = 1.0 / static_cast<double>(e.raw_weight);
    g[e.a].push_back({e.b, len});
    g[e.b].push_back({e.a, len});
  }
  for (auto& row : g)
    std::sort(row.begin(), row.end(), [](const auto& x, const auto& y) { return x.to < y.to; });
  return g;
}

bool same_length(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); }

// Single-source shortest paths: distances, path counts, predecessor lists and
// the settle order (non-decreasing distance).
struct ShortestPaths {
  std::vector<double> dist;
  std::vector<double> sigma;
  std::vector<std::vector<std::size_t>> pred;
  std::vector<std::size_t> order;
};

ShortestPaths shortest_paths(const Graph& g, std::size_t source) {
  const std::size_t n = g.size();
  const double inf = std::numeric_limits<double>::infinity();
  ShortestPaths sp{std::vector<double>(n, inf), std::vector<double>(n, 0.0),
                   std::vector<std::vector<std::size_t>>(n), {}};
  sp.dist[source] = 0.0;
  sp.sigma[source] = 1.0;
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  queue.push({0.0, source});
  std::vector<bool> done(n, false);
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (done[u]) continue;
    done[u] = true;
    sp.order.push_back(u);
    for (const auto& [v, len] : g[u]) {
      if (done[v]) continue;
      const double nd = d + len;
      if (sp.dist[v] == inf || (nd < sp.dist[v] && !same_length(nd, sp.dist[v]))) {
        sp.dist[v] = nd;
        sp.sigma[v] = sp.sigma[u];
        sp.pred[v].assign(1, u);
        queue.push({nd, v});
      } else if (same_length(nd, sp.dist[v])) {
        sp.sigma[v] += sp.sigma[u];
        sp.pred[v].push_back(u);
      }
    }
  }
  return sp;
}

struct PathMetrics {
  std::vector<double> betweenness;
  std::vector<double> closeness;
};

// Brandes accumulation; undirected pairs are counted once.
PathMetrics path_metrics(const Graph& g) {
  const std::size_t n = g.size();
  PathMetrics out{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  std::vector<double> delta(n);
  for (std::size_t s = 0; s < n; ++s) {
    const ShortestPaths sp = shortest_paths(g, s);
    for (std::size_t v : sp.order)
      if (v != s) out.closeness[s] += 1.0 / sp.dist[v];
    std::fill(delta.begin(), delta.end(), 0.0);
    for (auto it = sp.order.rbegin(); it != sp.order.rend(); ++it) {
      const std::size_t w = *it;
      for (std::size_t v : sp.pred[w]) delta[v] += sp.sigma[v] / sp.sigma[w] * (1.0 + delta[w]);
      if (w != s) out.betweenness[w] += delta[w];
    }
  }
  for (double& b : out.betweenness) b /= 2.0;
  return out;
}

// Power iteration on (W + I) from the uniform vector, unit L2 norm.
std::vector<double> eigenvector_centrality(const NetworkSlice& slice, bool weighted) {
  const std::size_t n = slice.order();
  std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(n, 1)))), next(n);
  for (int it = 0; it < 10000; ++it) {
    next = x;
    for (const Edge& e : slice.edges) {
      const double w = weighted ? e.norm_weight : 1.0;
      next[e.a] += w * x[e.b];
      next[e.b] += w * x[e.a];
    }
    double norm = 0.0;
    for (double v : next) norm += v * v;
    norm = std::sqrt(norm);
    if (norm == 0.0) break;
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      next[i] /= norm;
      change = std::max(change, std::abs(next[i] - x[i]));
    }
    x.swap(next);
    if (change < 1e-13) break;
  }
  return x;
}

}  // namespace

CentralityProfile compute_profiles(const NetworkSlice& slice, std::span<const std::string> charset,
                                   PathLength lengths) {
  if (charset.empty()) throw std::invalid_argument("compute_profiles: empty character set");
  std::vector<std::size_t> rows;
  for (const auto& name : charset) {
    const auto idx = slice.index_of(name);
    if (!idx) throw std::invalid_argument("compute_profiles: '" + name + "' is not in the network");
    rows.push_back(*idx);
  }

  const std::size_t n = slice.order();
  std::vector<double> degree(n, 0.0), strength(n, 0.0);
  for (const Edge& e : slice.edges) {
    degree[e.a] += 1.0;
    degree[e.b] += 1.0;
    strength[e.a] += e.norm_weight;
    strength[e.b] += e.norm_weight;
  }
  const PathMetrics hops = path_metrics(build_graph(slice, std::nullopt));
  const PathMetrics weighted = path_metrics(build_graph(slice, lengths));
  const auto eig = eigenvector_centrality(slice, false);
  const auto eig_w = eigenvector_centrality(slice, true);

  CentralityProfile p;
  p.characters.assign(charset.begin(), charset.end());
  p.raw.resize(static_cast<Eigen::Index>(rows.size()), kMetricCount);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t v = rows[r];
    p.raw.row(static_cast<Eigen::Index>(r)) << degree[v], strength[v], hops.betweenness[v],
        weighted.betweenness[v], hops.closeness[v], weighted.closeness[v], eig[v], eig_w[v];
  }
  p.z = zscore_columns(p.raw);
  return p;
}

Eigen::VectorXd average_ranks(const Eigen::Ref<const Eigen::VectorXd>& values) {
  const Eigen::Index n = values.size();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return values(a) < values(b); });
  Eigen::VectorXd ranks(n);
  for (Eigen::Index i = 0; i < n;) {
    Eigen::Index j = i;
    while (j + 1 < n && values(order[j + 1]) == values(order[i])) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Eigen::Index k = i; k <= j; ++k) ranks(order[k]) = rank;
    i = j + 1;
  }
  return ranks;
}

Eigen::MatrixXd spearman_matrix(const Eigen::Ref<const Eigen::MatrixXd>& data) {
  if (data.rows() < 3) throw std::invalid_argument("spearman_matrix: need at least 3 rows");
  const Eigen::Index m = data.cols();
  Eigen::MatrixXd ranks(data.rows(), m);
  for (Eigen::Index c = 0; c < m; ++c) ranks.col(c) = average_ranks(data.col(c));
  const Eigen::MatrixXd centred = ranks.rowwise() - ranks.colwise().mean();
  const Eigen::VectorXd norms = centred.colwise().norm();
  Eigen::MatrixXd rho = Eigen::MatrixXd::Identity(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = a + 1; b < m; ++b) {
      const double value = norms(a) > 0.0 && norms(b) > 0.0
                               ? centred.col(a).dot(centred.col(b)) / (norms(a) * norms(b))
                               : 0.0;
      rho(a, b) = rho(b, a) = value;
    }
  return rho;
}

Eigen::MatrixXd spearman_matrix(const CentralityProfile& profiles) { return spearman_matrix(profiles.raw); }

std::optional<Linkage> parse_linkage(std::string_view text) {
  if (text == "average") return Linkage::Average;
  if (text == "complete") return Linkage::Complete;
  if (text == "single") return Linkage::Single;
  if (text == "ward") return Linkage::Ward;
  return std::nullopt;
}

std::vector<int> Dendrogram::cut(int k) const {
  if (k < 1 || k > points) throw std::invalid_argument("dendrogram cut: k out of range");
  std::vector<int> parent(points);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&parent](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int m = 0; m < points - k; ++m) parent[find(merges[m].b)] = find(merges[m].a);
  std::map<int, int> label;
  std::vector<int> out(points);
  for (int i = 0; i < points; ++i) {
    const auto [it, inserted] = label.try_emplace(find(i), static_cast<int>(label.size()));
    out[i] = it->second;
  }
  return out;
}

Dendrogram agglomerate(const Eigen::Ref<const Eigen::MatrixXd>& points, Linkage linkage) {
  const int n = static_cast<int>(points.rows());
  Eigen::MatrixXd d(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double dist = (points.row(i) - points.row(j)).norm();
      d(i, j) = linkage == Linkage::Ward ? dist * dist : dist;
    }
  std::vector<bool> active(n, true);
  std::vector<double> size(n, 1.0);
  Dendrogram tree;
  tree.points = n;
  for (int step = 0; step + 1 < n; ++step) {
    int bi = -1, bj = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (int j = i + 1; j < n; ++j)
        if (active[j] && d(i, j) < best) {
          best = d(i, j);
          bi = i;
          bj = j;
        }
    }
    for (int k = 0; k < n; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      double value = 0.0;
      switch (linkage) {
        case Linkage::Single: value = std::min(d(bi, k), d(bj, k)); break;
        case Linkage::Complete: value = std::max(d(bi, k), d(bj, k)); break;
        case Linkage::Average:
          value = (size[bi] * d(bi, k) + size[bj] * d(bj, k)) / (size[bi] + size[bj]);
          break;
        case Linkage::Ward:
          value = ((size[bi] + size[k]) * d(bi, k) + (size[bj] + size[k]) * d(bj, k) - size[k] * best) /
                  (size[bi] + size[bj] + size[k]);
          break;
      }
      d(bi, k) = d(k, bi) = value;
    }
    size[bi] += size[bj];
    active[bj] = false;
    tree.merges.push_back({bi, bj, linkage == Linkage::Ward ? std::sqrt(best) : best});
  }
  return tree;
}

double mean_silhouette(const Eigen::Ref<const Eigen::MatrixXd>& points, std::span<const int> labels) {
  const Eigen::Index n = points.rows();
  if (n == 0) return 0.0;
  const int k = *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<int> counts(k, 0);
  for (int l : labels) ++counts[l];
  double total = 0.0;
  std::vector<double> sums(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (counts[labels[i]] <= 1) continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) sums[labels[j]] += (points.row(i) - points.row(j)).norm();
    const double a = sums[labels[i]] / (counts[labels[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c)
      if (c != labels[i] && counts[c] > 0) b = std::min(b, sums[c] / counts[c]);
    if (!std::isfinite(b)) continue;
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

Partition cluster_profiles(const CentralityProfile& profiles, std::optional<int> k, Linkage linkage) {
  const int n = static_cast<int>(profiles.characters.size());
  if (n < 2) throw std::invalid_argument("cluster_profiles: need at least 2 characters");
  const Eigen::MatrixXd points = profiles.z;
  const Dendrogram tree = agglomerate(points, linkage);
  Partition p;
  p.elements = profiles.characters;
  if (k) {
    p.cluster = tree.cut(*k);
    return p;
  }
  const int upper = std::min(10, n - 1);
  if (upper < 2) {
    p.cluster = tree.cut(std::min(2, n));
    return p;
  }
  double best = -std::numeric_limits<double>::infinity();
  for (int c = 2; c <= upper; ++c) {
    auto labels = tree.cut(c);
    const double s = mean_silhouette(points, labels);
    if (s > best) {
      best = s;
      p.cluster = std::move(labels);
    }
  }
  return p;
}

double ari(std::span<const int> p1, std::span<const int> p2) {
  if (p1.size() != p2.size()) throw std::invalid_argument("ari: partitions cover different universes");
  const std::size_t n = p1.size();
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> a, b;
  for (std::size_t i = 0; i < n; ++i) {
    joint[{p1[i], p2[i]}] += 1.0;
    a[p1[i]] += 1.0;
    b[p2[i]] += 1.0;
  }
  auto pairs = [](double x) { return x * (x - 1.0) / 2.0; };
  double index = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& [key, c] : joint) index += pairs(c);
  for (const auto& [key, c] : a) sum_a += pairs(c);
  for (const auto& [key, c] : b) sum_b += pairs(c);
  const double total = pairs(static_cast<double>(n));
  if (total == 0.0) return 1.0;
  const double expected = sum_a * sum_b / total;
  const double maximum = 0.5 * (sum_a + sum_b);
  if (maximum == expected) return 1.0;
  return (index - expected) / (maximum - expected);
}

double ari(const Partition& p1, const Partition& p2) {
  if (p1.elements.size() != p2.elements.size())
    throw std::invalid_argument("ari: partitions cover different universes");
  std::map<std::string, int> second;
  for (std::size_t i = 0; i < p2.elements.size(); ++i) second.emplace(p2.elements[i], p2.cluster[i]);
  std::vector<int> aligned;
  for (const auto& e : p1.elements) {
    const auto it = second.find(e);
    if (it == second.end()) throw std::invalid_argument("ari: partitions cover different universes");
    aligned.push_back(it->second);
  }
  return ari(p1.cluster, aligned);
}

Eigen::MatrixXd cluster_centroids(const CentralityProfile& profiles, const Partition& partition) {
  const int k = partition.cluster.empty() ? 0 : *std::max_element(partition.cluster.begin(), partition.cluster.end()) + 1;
  Eigen::MatrixXd centroids = Eigen::MatrixXd::Zero(k, kMetricCount);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
  for (std::size_t i = 0; i < partition.cluster.size(); ++i) {
    centroids.row(partition.cluster[i]) += profiles.z.row(static_cast<Eigen::Index>(i));
    counts(partition.cluster[i]) += 1.0;
  }
  for (int c = 0; c < k; ++c)
    if (counts(c) > 0) centroids.row(c) /= counts(c);
  return centroids;
}

}  // namespace storynet
