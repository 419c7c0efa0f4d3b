#include "storynet/graph_match.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "storynet/lap.hpp"

namespace storynet {

std::size_t Matching::matched() const {
  return static_cast<std::size_t>(std::count_if(map.begin(), map.end(), [](int j) { return j >= 0; }));
}

bool Matching::injective() const {
  std::set<int> used;
  for (int j : map)
    if (j >= 0 && !used.insert(j).second) return false;
  return true;
}

void MatchProblem::validate() const {
  if (A.rows() != A.cols() || B.rows() != B.cols() || A.rows() != B.rows())
    throw std::invalid_argument("match problem: adjacencies must be square and of equal size");
  const Eigen::Index n = A.rows();
  if (static_cast<Eigen::Index>(labels1.size()) != n || static_cast<Eigen::Index>(labels2.size()) != n)
    throw std::invalid_argument("match problem: label count differs from matrix size");
  if (prior) {
    if (prior->rows() != n || prior->cols() != n)
      throw std::invalid_argument("match problem: prior has the wrong shape");
    if ((prior->array() < 0.0).any()) throw std::invalid_argument("match problem: negative prior entry");
  }
  std::set<int> s1, s2;
  for (const auto& [i, j] : seeds) {
    if (i < 0 || j < 0 || i >= n || j >= n) throw std::invalid_argument("match problem: seed out of range");
    if (!s1.insert(i).second || !s2.insert(j).second)
      throw std::invalid_argument("match problem: seeds are not injective");
  }
}

void MatchProblem::add_seeds_by_label(std::span<const std::pair<std::string, std::string>> pairs) {
  for (const auto& [a, b] : pairs) {
    const auto ia = std::find(labels1.begin(), labels1.end(), a);
    const auto ib = std::find(labels2.begin(), labels2.end(), b);
    if (ia == labels1.end() || ib == labels2.end())
      throw std::invalid_argument("seed '" + a + "' / '" + b + "' is not in the problem");
    seeds.emplace_back(static_cast<int>(ia - labels1.begin()), static_cast<int>(ib - labels2.begin()));
  }
  validate();
}

MatchProblem pad_graphs(const NetworkSlice& g1, const NetworkSlice& g2, WeightKind weights) {
  std::vector<std::string> universe;
  std::set_union(g1.vertices.begin(), g1.vertices.end(), g2.vertices.begin(), g2.vertices.end(),
                 std::back_inserter(universe));
  MatchProblem p;
  p.A = adjacency(g1, universe, weights);
  p.B = adjacency(g2, universe, weights);
  p.labels1 = universe;
  p.labels2 = universe;
  p.padded = universe.size() != g1.order() || universe.size() != g2.order();
  return p;
}

MatchProblem centre(MatchProblem problem) {
  if (problem.centred) throw std::invalid_argument("adjacencies are already centred");
  problem.A = centre_adjacency(problem.A);
  problem.B = centre_adjacency(problem.B);
  problem.centred = true;
  return problem;
}

namespace {

struct FreeIndex {
  std::vector<int> rows;
  std::vector<int> cols;
};

FreeIndex free_indices(const MatchProblem& p) {
  const int n = static_cast<int>(p.size());
  std::vector<bool> r(n, false), c(n, false);
  for (const auto& [i, j] : p.seeds) {
    r[i] = true;
    c[j] = true;
  }
  FreeIndex f;
  for (int i = 0; i < n; ++i) {
    if (!r[i]) f.rows.push_back(i);
    if (!c[i]) f.cols.push_back(i);
  }
  return f;
}

Matching empty_matching(const MatchProblem& p, std::string method) {
  Matching m;
  m.labels1 = p.labels1;
  m.labels2 = p.labels2;
  m.map.assign(p.labels1.size(), -1);
  m.confidence.assign(p.labels1.size(), 0.0);
  m.seed.assign(p.labels1.size(), false);
  m.method = std::move(method);
  for (const auto& [i, j] : p.seeds) {
    m.map[i] = j;
    m.confidence[i] = 1.0;
    m.seed[i] = true;
  }
  return m;
}

struct QuadraticWeights {
  double convex = 0.0;      // coefficient of ||AD - DB||^2
  double indefinite = 0.0;  // coefficient of -trace(A D B D^T)
};

double quadratic_value(const MatchProblem& p, const QuadraticWeights& w, const Eigen::MatrixXd& D) {
  double f = 0.0;
  if (w.convex != 0.0) f += w.convex * (p.A * D - D * p.B).squaredNorm();
  if (w.indefinite != 0.0) f -= w.indefinite * (p.A * D * p.B).cwiseProduct(D).sum();
  return f;
}

double full_value(const MatchProblem& p, const QuadraticWeights& w, double prior_weight,
                  const Eigen::MatrixXd& D) {
  double f = quadratic_value(p, w, D);
  if (p.prior) f -= prior_weight * p.prior->cwiseProduct(D).sum();
  return f;
}

Eigen::MatrixXd gradient(const MatchProblem& p, const QuadraticWeights& w, double prior_weight,
                         const Eigen::MatrixXd& D) {
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(D.rows(), D.cols());
  if (w.convex != 0.0) {
    const Eigen::MatrixXd R = p.A * D - D * p.B;
    G += 2.0 * w.convex * (p.A.transpose() * R - R * p.B.transpose());
  }
  if (w.indefinite != 0.0)
    G -= w.indefinite * (p.A * D * p.B.transpose() + p.A.transpose() * D * p.B);
  if (p.prior) G -= prior_weight * *p.prior;
  return G;
}

Eigen::MatrixXd seeded_barycenter(const MatchProblem& p, const FreeIndex& f) {
  const Eigen::Index n = p.size();
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [i, j] : p.seeds) D(i, j) = 1.0;
  if (!f.rows.empty()) {
    const double v = 1.0 / static_cast<double>(f.rows.size());
    for (int i : f.rows)
      for (int j : f.cols) D(i, j) = v;
  }
  return D;
}

void check_doubly_stochastic(const Eigen::MatrixXd& D, Eigen::Index n) {
  if (D.rows() != n || D.cols() != n) throw std::invalid_argument("start matrix has the wrong shape");
  if ((D.array() < -1e-12).any()) throw std::invalid_argument("start matrix has negative entries");
  if ((D.rowwise().sum().array() - 1.0).abs().maxCoeff() > 1e-8 ||
      (D.colwise().sum().array() - 1.0).abs().maxCoeff() > 1e-8)
    throw std::invalid_argument("start matrix is not doubly stochastic");
}

// One Frank-Wolfe run with exact line search; returns true on convergence.
bool frank_wolfe(const MatchProblem& p, const QuadraticWeights& w, const RelaxOptions& options,
                 const FreeIndex& f, Eigen::MatrixXd& D) {
  if (f.rows.empty()) return true;
  double value = full_value(p, w, options.prior_weight, D);
  for (std::size_t it = 0; it < options.max_iter; ++it) {
    const Eigen::MatrixXd G = gradient(p, w, options.prior_weight, D);
    const Eigen::MatrixXd G_free = G(f.rows, f.cols);
    const auto perm = lap_solve(G_free, false);
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(D.rows(), D.cols());
    for (const auto& [i, j] : p.seeds) Q(i, j) = 1.0;
    for (std::size_t k = 0; k < f.rows.size(); ++k) Q(f.rows[k], f.cols[perm[k]]) = 1.0;

    const Eigen::MatrixXd E = Q - D;
    const double slope = G.cwiseProduct(E).sum();
    if (-slope <= options.tol * (1.0 + std::abs(value))) return true;

    // f(D + tE) = f(D) + slope t + curvature t^2
    double curvature = 0.0;
    if (w.convex != 0.0) curvature += w.convex * (p.A * E - E * p.B).squaredNorm();
    if (w.indefinite != 0.0) curvature -= w.indefinite * (p.A * E * p.B).cwiseProduct(E).sum();
    double t;
    if (curvature > 0.0)
      t = std::clamp(-slope / (2.0 * curvature), 0.0, 1.0);
    else
      t = slope + curvature < 0.0 ? 1.0 : 0.0;
    if (t <= 0.0) return true;

    D += t * E;
    const double next = full_value(p, w, options.prior_weight, D);
    if (options.observer) options.observer(D, next);
    const bool small = std::abs(value - next) <= options.tol * (1.0 + std::abs(value));
    value = next;
    if (small) return true;
  }
  return false;
}

Matching project(const MatchProblem& p, const FreeIndex& f, const Eigen::MatrixXd& score,
                 std::string method) {
  Matching m = empty_matching(p, std::move(method));
  if (f.rows.empty()) return m;
  const Eigen::MatrixXd S = score(f.rows, f.cols);
  const auto perm = lap_solve(S, true);
  for (std::size_t k = 0; k < f.rows.size(); ++k) {
    if (perm[k] < 0) continue;
    const int i = f.rows[k], j = f.cols[perm[k]];
    m.map[i] = j;
    m.confidence[i] = score(i, j);
  }
  return m;
}

std::string_view objective_name(RelaxObjective o) {
  switch (o) {
    case RelaxObjective::Convex: return "convex";
    case RelaxObjective::Indefinite: return "indefinite";
    case RelaxObjective::Concave: return "concave";
  }
  return "convex";
}

}  // namespace

double relax_objective(const MatchProblem& problem, RelaxObjective objective, const Eigen::MatrixXd& D) {
  return objective == RelaxObjective::Convex ? quadratic_value(problem, {1.0, 0.0}, D)
                                             : quadratic_value(problem, {0.0, 1.0}, D);
}

double qap_agreement(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, std::span<const int> map) {
  double total = 0.0;
  const auto n = static_cast<Eigen::Index>(map.size());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k)
      if (map[i] >= 0 && map[k] >= 0) total += A(i, k) * B(map[i], map[k]);
  return total;
}

Matching match_relax(const MatchProblem& problem, RelaxObjective objective, const RelaxOptions& options) {
  problem.validate();
  const FreeIndex f = free_indices(problem);
  Eigen::MatrixXd D;
  if (options.start) {
    D = *options.start;
    check_doubly_stochastic(D, problem.size());
    for (const auto& [i, j] : problem.seeds)
      if (std::abs(D(i, j) - 1.0) > 1e-8)
        throw std::invalid_argument("start matrix disagrees with a hard seed");
  } else {
    D = seeded_barycenter(problem, f);
  }

  bool converged = true;
  switch (objective) {
    case RelaxObjective::Convex:
      converged = frank_wolfe(problem, {1.0, 0.0}, options, f, D);
      break;
    case RelaxObjective::Indefinite:
      converged = frank_wolfe(problem, {0.0, 1.0}, options, f, D);
      break;
    case RelaxObjective::Concave:
      for (double lambda : options.lambda_schedule)
        converged = frank_wolfe(problem, {1.0 - lambda, 2.0 * lambda}, options, f, D);
      break;
  }

  Matching m = project(problem, f, D, std::string(objective_name(objective)));
  m.converged = converged;
  m.config = {{"objective", objective_name(objective)},
              {"max_iter", options.max_iter},
              {"tol", options.tol},
              {"prior_weight", options.prior_weight},
              {"seeds", problem.seeds.size()},
              {"centred", problem.centred},
              {"padded", problem.padded}};
  return m;
}

Matching match_umeyama(const MatchProblem& problem, double prior_weight) {
  problem.validate();
  const FreeIndex f = free_indices(problem);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ea(problem.A), eb(problem.B);
  // Eigen returns ascending eigenvalues; reversing both keeps the pairing.
  const Eigen::MatrixXd UA = ea.eigenvectors().rowwise().reverse().cwiseAbs();
  const Eigen::MatrixXd UB = eb.eigenvectors().rowwise().reverse().cwiseAbs();
  Eigen::MatrixXd K = UA * UB.transpose();
  if (problem.prior) K += prior_weight * *problem.prior;
  Matching m = project(problem, f, K, "umeyama");
  m.config = {{"prior_weight", prior_weight}, {"seeds", problem.seeds.size()},
              {"centred", problem.centred}, {"padded", problem.padded}};
  return m;
}

Matching match_percolation(const MatchProblem& problem, const PercolationOptions& options) {
  problem.validate();
  if (problem.seeds.empty()) throw std::invalid_argument("percolation needs at least one seed");
  const int n = static_cast<int>(problem.size());

  std::vector<std::vector<int>> nb1(n), nb2(n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      if (i != k && problem.A(i, k) > 0.0) nb1[i].push_back(k);
      if (i != k && problem.B(i, k) > 0.0) nb2[i].push_back(k);
    }

  std::vector<int> order1(n), order2(n);
  std::iota(order1.begin(), order1.end(), 0);
  std::iota(order2.begin(), order2.end(), 0);
  std::stable_sort(order1.begin(), order1.end(),
                   [&](int a, int b) { return problem.labels1[a] < problem.labels1[b]; });
  std::stable_sort(order2.begin(), order2.end(),
                   [&](int a, int b) { return problem.labels2[a] < problem.labels2[b]; });

  Matching m = empty_matching(problem, "percolation");
  std::vector<int> owner2(n, -1);
  for (const auto& [i, j] : problem.seeds) owner2[j] = i;

  Eigen::MatrixXd marks = Eigen::MatrixXd::Zero(n, n);
  auto spread = [&](int u, int v) {
    for (int a : nb1[u]) {
      if (m.map[a] >= 0) continue;
      for (int b : nb2[v])
        if (owner2[b] < 0) marks(a, b) += 1.0;
    }
  };
  for (const auto& [i, j] : problem.seeds) spread(i, j);

  double threshold = options.r;
  while (true) {
    double best = -1.0;
    int bi = -1, bj = -1;
    for (int i : order1) {
      if (m.map[i] >= 0) continue;
      for (int j : order2) {
        if (owner2[j] >= 0) continue;
        double score = marks(i, j);
        if (problem.prior) score += options.prior_weight * (*problem.prior)(i, j);
        if (score > best) {
          best = score;
          bi = i;
          bj = j;
        }
      }
    }
    if (bi < 0) break;
    if (best < threshold) {
      if (options.fallback_to_one && threshold > 1.0) {
        threshold = 1.0;
        continue;
      }
      break;
    }
    m.map[bi] = bj;
    m.confidence[bi] = best;
    owner2[bj] = bi;
    spread(bi, bj);
  }
  m.config = {{"r", options.r}, {"fallback_to_one", options.fallback_to_one},
              {"prior_weight", options.prior_weight}, {"seeds", problem.seeds.size()}};
  return m;
}

std::optional<MatchMethod> parse_match_method(std::string_view text) {
  if (text == "convex") return MatchMethod::Convex;
  if (text == "indefinite") return MatchMethod::Indefinite;
  if (text == "concave") return MatchMethod::Concave;
  if (text == "percolation") return MatchMethod::Percolation;
  if (text == "umeyama") return MatchMethod::Umeyama;
  return std::nullopt;
}

std::string_view to_string(MatchMethod method) {
  switch (method) {
    case MatchMethod::Convex: return "convex";
    case MatchMethod::Indefinite: return "indefinite";
    case MatchMethod::Concave: return "concave";
    case MatchMethod::Percolation: return "percolation";
    case MatchMethod::Umeyama: return "umeyama";
  }
  return "convex";
}

Matching run_matcher(const MatchProblem& problem, MatchMethod method, const AdaptiveOptions& options) {
  switch (method) {
    case MatchMethod::Convex: return match_relax(problem, RelaxObjective::Convex, options.relax);
    case MatchMethod::Indefinite: return match_relax(problem, RelaxObjective::Indefinite, options.relax);
    case MatchMethod::Concave: return match_relax(problem, RelaxObjective::Concave, options.relax);
    case MatchMethod::Percolation: return match_percolation(problem, options.percolation);
    case MatchMethod::Umeyama: return match_umeyama(problem, options.relax.prior_weight);
  }
  throw std::invalid_argument("unknown matching method");
}

double structural_scale(const MatchProblem& problem) {
  const double a = problem.A.cwiseAbs().rowwise().sum().maxCoeff();
  const double b = problem.B.cwiseAbs().colwise().sum().maxCoeff();
  return std::max(a * b, 1.0);
}

namespace {

// Doubly stochastic start honouring hard seeds and soft seed pairs.
Eigen::MatrixXd soft_start(const MatchProblem& p, const std::vector<std::pair<int, int>>& soft) {
  const Eigen::Index n = p.size();
  std::vector<bool> used1(n, false), used2(n, false);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  for (const auto& pairs : {std::cref(p.seeds), std::cref(soft)})
    for (const auto& [i, j] : pairs.get()) {
      D(i, j) = 1.0;
      used1[i] = used2[j] = true;
    }
  std::vector<int> rows, cols;
  for (int i = 0; i < n; ++i) {
    if (!used1[i]) rows.push_back(i);
    if (!used2[i]) cols.push_back(i);
  }
  for (int i : rows)
    for (int j : cols) D(i, j) = 1.0 / static_cast<double>(rows.size());
  return D;
}

bool is_relaxation(MatchMethod m) {
  return m == MatchMethod::Convex || m == MatchMethod::Indefinite || m == MatchMethod::Concave;
}

}  // namespace

Matching match_adaptive(const MatchProblem& problem, MatchMethod method, SeedMode mode,
                        std::size_t rounds, std::size_t seeds_per_round, const AdaptiveOptions& options) {
  problem.validate();
  Matching current = run_matcher(problem, method, options);
  MatchProblem p = problem;
  AdaptiveOptions opts = options;
  std::vector<std::pair<int, int>> soft;
  const double weight = options.soft_weight > 0.0 ? options.soft_weight : 10.0 * structural_scale(problem);

  for (std::size_t round = 0; round < rounds; ++round) {
    std::vector<bool> row_taken(p.size(), false), col_taken(p.size(), false);
    for (const auto& [i, j] : p.seeds) row_taken[i] = col_taken[j] = true;
    for (const auto& [i, j] : soft) row_taken[i] = col_taken[j] = true;

    std::vector<int> candidates;
    for (int i = 0; i < static_cast<int>(current.map.size()); ++i)
      if (current.map[i] >= 0 && !row_taken[i] && !col_taken[current.map[i]]) candidates.push_back(i);
    std::stable_sort(candidates.begin(), candidates.end(), [&](int a, int b) {
      return current.confidence[a] > current.confidence[b];
    });
    if (candidates.size() > seeds_per_round) candidates.resize(seeds_per_round);
    if (candidates.empty()) break;

    if (mode == SeedMode::Hard) {
      for (int i : candidates) p.seeds.emplace_back(i, current.map[i]);
    } else {
      if (!p.prior) p.prior = Eigen::MatrixXd::Zero(p.size(), p.size());
      for (int i : candidates) {
        soft.emplace_back(i, current.map[i]);
        (*p.prior)(i, current.map[i]) += weight / std::max(opts.relax.prior_weight, 1e-12);
      }
      if (is_relaxation(method)) opts.relax.start = soft_start(p, soft);
    }
    current = run_matcher(p, method, opts);
  }

  current.method = std::string(to_string(method)) + (mode == SeedMode::Hard ? "+adaptive-hard" : "+adaptive-soft");
  current.config["rounds"] = rounds;
  current.config["seeds_per_round"] = seeds_per_round;
  current.config["seed_mode"] = mode == SeedMode::Hard ? "hard" : "soft";
  if (mode == SeedMode::Soft) current.config["soft_weight"] = weight;
  return current;
}

Matching match_adaptive_temporal(const DynamicNetwork& dyn1, const DynamicNetwork& dyn2,
                                 MatchMethod method, std::size_t seeds_per_round,
                                 const AdaptiveOptions& options) {
  if (dyn1.slices.size() != dyn2.slices.size() || dyn1.slices.empty())
    throw std::invalid_argument("temporal seeding needs two non-empty dynamic networks of equal length");
  if (method == MatchMethod::Percolation)
    throw std::invalid_argument("temporal seeding does not support percolation");
  std::vector<std::pair<std::string, std::string>> seeds;
  Matching current;
  for (std::size_t t = 0; t < dyn1.slices.size(); ++t) {
    MatchProblem p = pad_graphs(dyn1.slices[t], dyn2.slices[t]);
    if (p.size() == 0) continue;
    std::vector<std::pair<std::string, std::string>> usable;
    for (const auto& s : seeds)
      if (std::count(p.labels1.begin(), p.labels1.end(), s.first) &&
          std::count(p.labels2.begin(), p.labels2.end(), s.second))
        usable.push_back(s);
    p.add_seeds_by_label(usable);
    current = run_matcher(p, method, options);

    std::vector<int> candidates;
    for (int i = 0; i < static_cast<int>(current.map.size()); ++i)
      if (current.map[i] >= 0 && !current.seed[i]) candidates.push_back(i);
    std::stable_sort(candidates.begin(), candidates.end(), [&](int a, int b) {
      return current.confidence[a] > current.confidence[b];
    });
    if (candidates.size() > seeds_per_round) candidates.resize(seeds_per_round);
    for (int i : candidates) seeds.emplace_back(current.labels1[i], current.labels2[current.map[i]]);
  }
  current.method = std::string(to_string(method)) + "+adaptive-temporal";
  current.config["seeds_per_round"] = seeds_per_round;
  return current;
}

Eigen::MatrixXd attribute_prior(std::span<const CharacterRecord* const> chars1,
                                std::span<const CharacterRecord* const> chars2, bool use_sex,
                                bool use_affiliation) {
  if (!use_sex && !use_affiliation) throw std::invalid_argument("attribute prior: no attribute enabled");
  const double enabled = (use_sex ? 1.0 : 0.0) + (use_affiliation ? 1.0 : 0.0);
  const auto n1 = static_cast<Eigen::Index>(chars1.size()), n2 = static_cast<Eigen::Index>(chars2.size());
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n1, n2);
  for (Eigen::Index i = 0; i < n1; ++i) {
    const CharacterRecord* a = chars1[i];
    if (!a) continue;
    for (Eigen::Index j = 0; j < n2; ++j) {
      const CharacterRecord* b = chars2[j];
      if (!b) continue;
      double agree = 0.0;
      if (use_sex && a->sex != Sex::Unknown && a->sex == b->sex) agree += 1.0;
      if (use_affiliation && !a->affiliation.empty() && a->affiliation == b->affiliation) agree += 1.0;
      P(i, j) = agree / enabled;
    }
  }
  return P;
}

Eigen::MatrixXd attribute_prior(const Corpus& corpus, std::span<const std::string> labels1,
                                std::span<const std::string> labels2, bool use_sex, bool use_affiliation) {
  std::vector<const CharacterRecord*> c1, c2;
  for (const auto& l : labels1) c1.push_back(corpus.find_character(l));
  for (const auto& l : labels2) c2.push_back(corpus.find_character(l));
  return attribute_prior(c1, c2, use_sex, use_affiliation);
}

double evaluate_matching(const Matching& matching, const std::map<std::string, std::string>& correspondence) {
  const std::set<std::string> side2(matching.labels2.begin(), matching.labels2.end());
  std::size_t evaluated = 0, correct = 0;
  for (std::size_t i = 0; i < matching.labels1.size(); ++i) {
    if (matching.seed[i]) continue;
    const auto it = correspondence.find(matching.labels1[i]);
    const std::string& truth = it == correspondence.end() ? matching.labels1[i] : it->second;
    if (!side2.count(truth)) continue;
    ++evaluated;
    if (matching.map[i] >= 0 && matching.labels2[matching.map[i]] == truth) ++correct;
  }
  if (evaluated == 0) throw std::invalid_argument("no non-seed character can be evaluated");
  return static_cast<double>(correct) / static_cast<double>(evaluated);
}

}  // namespace storynet
