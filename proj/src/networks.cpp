#include "storynet/networks.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <stdexcept>

namespace storynet {

std::optional<std::size_t> NetworkSlice::index_of(std::string_view name) const {
  const auto it = std::lower_bound(vertices.begin(), vertices.end(), name);
  if (it == vertices.end() || *it != name) return std::nullopt;
  return static_cast<std::size_t>(it - vertices.begin());
}

long NetworkSlice::raw_weight(std::string_view a, std::string_view b) const {
  auto ia = index_of(a), ib = index_of(b);
  if (!ia || !ib) return 0;
  if (*ib < *ia) std::swap(ia, ib);
  for (const Edge& e : edges)
    if (e.a == *ia && e.b == *ib) return e.raw_weight;
  return 0;
}

NetworkSlice NetworkSlice::from_tallies(
    const std::map<std::pair<std::string, std::string>, long>& tallies,
    std::vector<std::string> vertices, std::vector<std::string> covered_units) {
  NetworkSlice slice;
  std::set<std::string> all(vertices.begin(), vertices.end());
  for (const auto& [pair, w] : tallies) {
    if (w <= 0) continue;
    all.insert(pair.first);
    all.insert(pair.second);
  }
  slice.vertices.assign(all.begin(), all.end());
  slice.covered_units = std::move(covered_units);

  long max_raw = 0;
  for (const auto& [pair, w] : tallies) {
    if (w <= 0) continue;
    if (pair.first == pair.second) throw std::invalid_argument("self-loop on '" + pair.first + "'");
    std::size_t a = *slice.index_of(pair.first), b = *slice.index_of(pair.second);
    if (b < a) std::swap(a, b);
    slice.edges.push_back(Edge{a, b, w, 0.0});
    max_raw = std::max(max_raw, w);
  }
  std::sort(slice.edges.begin(), slice.edges.end(),
            [](const Edge& x, const Edge& y) { return std::tie(x.a, x.b) < std::tie(y.a, y.b); });
  for (std::size_t i = 1; i < slice.edges.size(); ++i)
    if (slice.edges[i].a == slice.edges[i - 1].a && slice.edges[i].b == slice.edges[i - 1].b)
      throw std::invalid_argument("duplicate edge in tallies");
  for (Edge& e : slice.edges)
    e.norm_weight = static_cast<double>(e.raw_weight) / static_cast<double>(max_raw);
  return slice;
}

namespace {

double edge_value(const Edge& e, WeightKind weights) {
  switch (weights) {
    case WeightKind::Raw: return static_cast<double>(e.raw_weight);
    case WeightKind::Normalized: return e.norm_weight;
    case WeightKind::Binary: return 1.0;
  }
  return 0.0;
}

}  // namespace

Eigen::MatrixXd adjacency(const NetworkSlice& slice, WeightKind weights) {
  const auto n = static_cast<Eigen::Index>(slice.order());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (const Edge& e : slice.edges) {
    const double w = edge_value(e, weights);
    A(e.a, e.b) = w;
    A(e.b, e.a) = w;
  }
  return A;
}

Eigen::MatrixXd adjacency(const NetworkSlice& slice, std::span<const std::string> universe,
                          WeightKind weights) {
  const auto n = static_cast<Eigen::Index>(universe.size());
  std::vector<Eigen::Index> position(slice.order(), -1);
  for (Eigen::Index i = 0; i < n; ++i)
    if (const auto v = slice.index_of(universe[i])) position[*v] = i;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (const Edge& e : slice.edges) {
    const Eigen::Index i = position[e.a], j = position[e.b];
    if (i < 0 || j < 0) continue;
    const double w = edge_value(e, weights);
    A(i, j) = w;
    A(j, i) = w;
  }
  return A;
}

// ---------------------------------------------------------------------------
// Construction

namespace {

struct Tally {
  std::map<std::pair<std::string, std::string>, long> weights;
  std::set<std::string> present;

  void add(const Corpus& corpus, const NarrativeUnit& unit, const std::set<std::string>* allowed) {
    for (const InteractionRecord* r : corpus.interactions_in(unit.id)) {
      const bool a_ok = !allowed || allowed->count(r->char_a);
      const bool b_ok = !allowed || allowed->count(r->char_b);
      if (a_ok) present.insert(r->char_a);
      if (b_ok) present.insert(r->char_b);
      if (a_ok && b_ok) weights[{r->char_a, r->char_b}] += r->count;
    }
  }

  std::vector<std::string> vertices(const std::set<std::string>* allowed, bool include_isolates) const {
    std::set<std::string> v = present;
    if (include_isolates && allowed) v.insert(allowed->begin(), allowed->end());
    return {v.begin(), v.end()};
  }
};

std::optional<std::set<std::string>> to_set(const CharacterFilter& charset) {
  if (!charset) return std::nullopt;
  return std::set<std::string>(charset->begin(), charset->end());
}

}  // namespace

NetworkSlice build_static(const Corpus& corpus, std::string_view medium, const PeriodSpec& period,
                          const CharacterFilter& charset, bool include_isolates) {
  const auto units = corpus.finest_units(medium, period);
  if (units.empty())
    throw std::invalid_argument("period '" + period.label + "' covers no units of medium '" +
                                std::string(medium) + "'");
  const auto allowed = to_set(charset);
  const std::set<std::string>* allowed_ptr = allowed ? &*allowed : nullptr;
  Tally tally;
  std::vector<std::string> covered;
  for (const NarrativeUnit* u : units) {
    tally.add(corpus, *u, allowed_ptr);
    covered.push_back(u->id);
  }
  return NetworkSlice::from_tallies(tally.weights, tally.vertices(allowed_ptr, include_isolates),
                                    std::move(covered));
}

DynamicNetwork build_dynamic(const Corpus& corpus, std::string_view medium, UnitKind unit_kind,
                             const PeriodSpec& period, const CharacterFilter& charset,
                             SliceMode mode, bool include_isolates) {
  const auto finest = corpus.finest_kind(medium);
  if (!finest) throw std::invalid_argument("unknown medium '" + std::string(medium) + "'");
  std::vector<const NarrativeUnit*> windows;
  for (const NarrativeUnit* u : corpus.units_of(medium, unit_kind))
    if (corpus.in_period(*u, period)) windows.push_back(u);
  if (windows.empty() || unit_kind < *finest)
    throw std::invalid_argument("unit kind '" + std::string(to_string(unit_kind)) +
                                "' is not available for medium '" + std::string(medium) +
                                "' in period '" + period.label + "'");

  std::map<std::string, std::size_t> window_of;
  for (std::size_t t = 0; t < windows.size(); ++t) window_of.emplace(windows[t]->id, t);

  std::vector<std::vector<const NarrativeUnit*>> members(windows.size());
  for (const NarrativeUnit* u : corpus.finest_units(medium, period)) {
    const NarrativeUnit* w = corpus.ancestor(*u, unit_kind);
    if (!w)
      throw std::invalid_argument("unit '" + u->id + "' has no " + std::string(to_string(unit_kind)) +
                                  " ancestor");
    const auto it = window_of.find(w->id);
    if (it != window_of.end()) members[it->second].push_back(u);
  }

  const auto allowed = to_set(charset);
  const std::set<std::string>* allowed_ptr = allowed ? &*allowed : nullptr;

  DynamicNetwork dyn;
  dyn.mode = mode;
  dyn.medium = std::string(medium);
  dyn.unit_kind = unit_kind;
  dyn.period = period.label;
  Tally running;
  std::vector<std::string> running_covered;
  for (std::size_t t = 0; t < windows.size(); ++t) {
    dyn.unit_ids.push_back(windows[t]->id);
    if (mode == SliceMode::Instant) {
      Tally tally;
      for (const NarrativeUnit* u : members[t]) tally.add(corpus, *u, allowed_ptr);
      dyn.slices.push_back(NetworkSlice::from_tallies(
          tally.weights, tally.vertices(allowed_ptr, include_isolates), {windows[t]->id}));
    } else {
      for (const NarrativeUnit* u : members[t]) running.add(corpus, *u, allowed_ptr);
      running_covered.push_back(windows[t]->id);
      dyn.slices.push_back(NetworkSlice::from_tallies(
          running.weights, running.vertices(allowed_ptr, include_isolates), running_covered));
    }
  }
  return dyn;
}

Corpus segment_blocks(const Corpus& corpus, std::string_view tv_medium, std::vector<std::string>* warnings) {
  Corpus out = corpus;
  const std::string medium(tv_medium);
  std::erase_if(out.units_, [&](const NarrativeUnit& u) {
    return u.medium == medium && u.kind == UnitKind::Block;
  });
  for (auto& u : out.units_)
    if (u.medium == medium) u.parent_ids.erase(UnitKind::Block);
  out.reindex();

  std::vector<std::size_t> scenes;
  for (std::size_t i = 0; i < out.units_.size(); ++i)
    if (out.units_[i].medium == medium && out.units_[i].kind == UnitKind::Scene) scenes.push_back(i);
  if (scenes.empty()) throw std::invalid_argument("medium '" + medium + "' has no scenes to segment");
  std::sort(scenes.begin(), scenes.end(),
            [&](std::size_t a, std::size_t b) { return out.units_[a].ordinal < out.units_[b].ordinal; });

  std::vector<NarrativeUnit> blocks;
  const NarrativeUnit* previous_episode = nullptr;
  std::optional<std::string> previous_location;
  for (std::size_t idx : scenes) {
    NarrativeUnit& scene = out.units_[idx];
    const NarrativeUnit* episode = out.ancestor(scene, UnitKind::Episode);
    if (!episode) throw std::invalid_argument("scene '" + scene.id + "' has no episode");
    if (!scene.location && warnings)
      warnings->push_back("scene '" + scene.id + "' has no location; assigned to its own block");
    const bool new_block = blocks.empty() || episode != previous_episode || !scene.location ||
                           !previous_location || *scene.location != *previous_location;
    if (new_block) {
      NarrativeUnit block;
      block.medium = medium;
      block.kind = UnitKind::Block;
      block.ordinal = static_cast<int>(blocks.size());
      block.id = medium + ":block:" + std::to_string(block.ordinal);
      while (out.find_unit(block.id)) block.id += "'";
      block.location = scene.location;
      for (const auto& [kind, pid] : scene.parent_ids)
        if (kind > UnitKind::Block) block.parent_ids.emplace(kind, pid);
      block.parent_ids[UnitKind::Episode] = episode->id;
      if (const NarrativeUnit* top = out.ancestor(scene, UnitKind::TopLevel))
        block.parent_ids[UnitKind::TopLevel] = top->id;
      blocks.push_back(std::move(block));
    }
    scene.parent_ids[UnitKind::Block] = blocks.back().id;
    previous_episode = episode;
    previous_location = scene.location;
  }
  out.units_.insert(out.units_.end(), std::make_move_iterator(blocks.begin()),
                    std::make_move_iterator(blocks.end()));
  out.reindex();
  return out;
}

// ---------------------------------------------------------------------------
// Statistics

namespace {

std::vector<std::vector<std::size_t>> neighbor_lists(const NetworkSlice& slice) {
  std::vector<std::vector<std::size_t>> adj(slice.order());
  for (const Edge& e : slice.edges) {
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
  }
  for (auto& row : adj) std::sort(row.begin(), row.end());
  return adj;
}

}  // namespace

std::vector<int> greedy_modularity_partition(const NetworkSlice& slice) {
  const std::size_t n = slice.order();
  std::vector<int> community(n);
  for (std::size_t i = 0; i < n; ++i) community[i] = static_cast<int>(i);
  const double m = static_cast<double>(slice.size());
  if (m == 0) return community;

  // Community id = smallest member vertex; links[i][j] = edges between i and j.
  std::vector<std::map<int, double>> links(n);
  std::vector<double> degree_share(n, 0.0);
  for (const Edge& e : slice.edges) {
    links[e.a][static_cast<int>(e.b)] += 1.0;
    links[e.b][static_cast<int>(e.a)] += 1.0;
    degree_share[e.a] += 1.0 / (2.0 * m);
    degree_share[e.b] += 1.0 / (2.0 * m);
  }
  std::vector<bool> alive(n, true);

  while (true) {
    double best = 0.0;
    int bi = -1, bj = -1;
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      for (const auto& [j, count] : links[i]) {
        if (j <= static_cast<int>(i)) continue;
        const double delta = 2.0 * (count / (2.0 * m) - degree_share[i] * degree_share[j]);
        if (delta > best + 1e-15) {
          best = delta;
          bi = static_cast<int>(i);
          bj = j;
        }
      }
    }
    if (bi < 0) break;
    // merge bj into bi (bi < bj)
    for (const auto& [k, count] : links[bj]) {
      if (k == bi) continue;
      links[bi][k] += count;
      links[k].erase(bj);
      links[k][bi] += count;
    }
    links[bi].erase(bj);
    links[bj].clear();
    degree_share[bi] += degree_share[bj];
    alive[bj] = false;
    for (auto& c : community)
      if (c == bj) c = bi;
  }
  return community;
}

double modularity(const NetworkSlice& slice, std::span<const int> community) {
  const double m = static_cast<double>(slice.size());
  if (m == 0) return 0.0;
  std::map<int, double> internal, degree_sum;
  for (const Edge& e : slice.edges) {
    if (community[e.a] == community[e.b]) internal[community[e.a]] += 1.0;
    degree_sum[community[e.a]] += 1.0;
    degree_sum[community[e.b]] += 1.0;
  }
  double q = 0.0;
  for (const auto& [c, d] : degree_sum) q += internal[c] / m - (d / (2.0 * m)) * (d / (2.0 * m));
  return q;
}

GraphStats compute_stats(const NetworkSlice& slice) {
  GraphStats s;
  s.n = slice.order();
  s.L = slice.size();
  if (s.n < 2) return s;
  const double n = static_cast<double>(s.n), L = static_cast<double>(s.L);
  s.density = 2.0 * L / (n * (n - 1.0));
  s.mean_degree = 2.0 * L / n;

  const auto adj = neighbor_lists(slice);

  // Largest connected component (ties: the one holding the smallest vertex).
  std::vector<int> component(s.n, -1);
  std::vector<std::size_t> sizes;
  for (std::size_t v = 0; v < s.n; ++v) {
    if (component[v] >= 0) continue;
    const int id = static_cast<int>(sizes.size());
    std::size_t count = 0;
    std::deque<std::size_t> queue{v};
    component[v] = id;
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop_front();
      ++count;
      for (std::size_t w : adj[u])
        if (component[w] < 0) {
          component[w] = id;
          queue.push_back(w);
        }
    }
    sizes.push_back(count);
  }
  const int lcc = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  if (sizes[lcc] >= 2) {
    double total = 0.0;
    double pairs = 0.0;
    std::vector<int> dist(s.n);
    for (std::size_t v = 0; v < s.n; ++v) {
      if (component[v] != lcc) continue;
      std::fill(dist.begin(), dist.end(), -1);
      dist[v] = 0;
      std::deque<std::size_t> queue{v};
      while (!queue.empty()) {
        const std::size_t u = queue.front();
        queue.pop_front();
        for (std::size_t w : adj[u])
          if (dist[w] < 0) {
            dist[w] = dist[u] + 1;
            total += dist[w];
            pairs += 1.0;
            queue.push_back(w);
          }
      }
    }
    s.mean_path_length = total / pairs;
  }

  double clustering = 0.0;
  for (std::size_t v = 0; v < s.n; ++v) {
    const auto& nb = adj[v];
    const std::size_t k = nb.size();
    if (k < 2) continue;
    std::size_t links = 0;
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 1; j < k; ++j)
        if (std::binary_search(adj[nb[i]].begin(), adj[nb[i]].end(), nb[j])) ++links;
    clustering += 2.0 * static_cast<double>(links) / static_cast<double>(k * (k - 1));
  }
  s.clustering = clustering / n;

  if (s.L > 0) {
    double sum_prod = 0.0, sum_half = 0.0, sum_sq = 0.0;
    for (const Edge& e : slice.edges) {
      const double j = static_cast<double>(adj[e.a].size()), k = static_cast<double>(adj[e.b].size());
      sum_prod += j * k;
      sum_half += 0.5 * (j + k);
      sum_sq += 0.5 * (j * j + k * k);
    }
    const double mean_half = sum_half / L;
    const double denominator = sum_sq / L - mean_half * mean_half;
    if (denominator > 1e-12) s.assortativity = (sum_prod / L - mean_half * mean_half) / denominator;
  }

  const auto partition = greedy_modularity_partition(slice);
  s.modularity = modularity(slice, partition);
  return s;
}

}  // namespace storynet
