#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "storynet/corpus.hpp"
#include "storynet/networks.hpp"

namespace storynet {

/// Partial injective map from side-1 vertices to side-2 vertices.
struct Matching {
  std::vector<std::string> labels1;
  std::vector<std::string> labels2;
  std::vector<int> map;             // side-1 index -> side-2 index, -1 if unmatched
  std::vector<double> confidence;   // per side-1 index, 0 if unmatched
  std::vector<bool> seed;           // side-1 index is a hard seed
  std::string method;
  nlohmann::json config = nlohmann::json::object();
  bool converged = true;

  std::size_t matched() const;
  bool injective() const;
};

/// Two adjacency matrices over aligned index spaces plus optional prior
/// knowledge: a nonnegative similarity prior and hard seed pairs.
struct MatchProblem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  std::vector<std::string> labels1;
  std::vector<std::string> labels2;
  std::optional<Eigen::MatrixXd> prior;
  std::vector<std::pair<int, int>> seeds;
  bool padded = false;
  bool centred = false;

  Eigen::Index size() const { return A.rows(); }
  /// Throws std::invalid_argument when shapes, prior or seeds are inconsistent.
  void validate() const;
  /// Adds hard seeds given by label; unknown labels throw.
  void add_seeds_by_label(std::span<const std::pair<std::string, std::string>> pairs);
};

/// Aligns two graphs on the sorted union of their vertices, missing vertices
/// becoming isolates.
MatchProblem pad_graphs(const NetworkSlice& g1, const NetworkSlice& g2,
                        WeightKind weights = WeightKind::Normalized);

/// Off-diagonal x -> 2x - 1, zero diagonal. Not idempotent: apply once.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> centre_adjacency(
    const Eigen::MatrixBase<Derived>& A) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out =
      (Scalar(2) * A.array() - Scalar(1)).matrix();
  out.diagonal().setZero();
  return out;
}

/// Centres both adjacencies of a problem (once; throws if already centred).
MatchProblem centre(MatchProblem problem);

enum class RelaxObjective { Convex, Indefinite, Concave };

struct RelaxOptions {
  std::size_t max_iter = 50;
  double tol = 1e-6;
  std::optional<Eigen::MatrixXd> start;  // doubly stochastic, defaults to barycenter
  double prior_weight = 1.0;
  std::vector<double> lambda_schedule{0.0, 0.25, 0.5, 0.75, 1.0};  // Concave only
  /// Called after every Frank-Wolfe iterate with the current matrix and objective.
  std::function<void(const Eigen::MatrixXd&, double)> observer;
};

/// Frank-Wolfe on the doubly stochastic relaxation, projected to a
/// permutation by linear assignment. Hard seeds stay fixed throughout.
Matching match_relax(const MatchProblem& problem, RelaxObjective objective,
                     const RelaxOptions& options = {});

/// Relaxed objective value in minimization form for a (doubly stochastic)
/// matrix: Convex ||AD - DB||^2, Indefinite -trace(A D B D^T).
double relax_objective(const MatchProblem& problem, RelaxObjective objective, const Eigen::MatrixXd& D);

/// trace(A P B P^T) for the permutation `map` (side-1 -> side-2).
double qap_agreement(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, std::span<const int> map);

/// Spectral matching from absolute eigenvector matrices.
Matching match_umeyama(const MatchProblem& problem, double prior_weight = 1.0);

struct PercolationOptions {
  int r = 2;
  bool fallback_to_one = true;  // drop the threshold to 1 when expansion stalls
  double prior_weight = 1.0;
};

/// Seeded percolation: every matched pair adds a mark to each neighbouring
/// candidate pair; the best-marked pair at or above the threshold is matched
/// next. Ties go to the lexicographically smallest (label1, label2).
Matching match_percolation(const MatchProblem& problem, const PercolationOptions& options = {});

enum class MatchMethod { Convex, Indefinite, Concave, Percolation, Umeyama };
enum class SeedMode { Hard, Soft };

std::optional<MatchMethod> parse_match_method(std::string_view text);
std::string_view to_string(MatchMethod method);

struct AdaptiveOptions {
  RelaxOptions relax;
  PercolationOptions percolation;
  /// Soft-seed prior weight; <= 0 selects 10x the structural scale.
  double soft_weight = 0.0;
};

/// Runs `method` once with the problem as given.
Matching run_matcher(const MatchProblem& problem, MatchMethod method, const AdaptiveOptions& options = {});

/// Adaptive seeding: the most confident pairs of each round become hard seeds
/// or a soft prior for the next round.
Matching match_adaptive(const MatchProblem& problem, MatchMethod method, SeedMode mode,
                        std::size_t rounds, std::size_t seeds_per_round,
                        const AdaptiveOptions& options = {});

/// Per-slice adaptive seeding over two cumulative dynamic networks of equal
/// length; seeds found on slice t are carried to slice t + 1.
Matching match_adaptive_temporal(const DynamicNetwork& dyn1, const DynamicNetwork& dyn2,
                                 MatchMethod method, std::size_t seeds_per_round,
                                 const AdaptiveOptions& options = {});

/// Upper bound on |(A D B)_ij| for doubly stochastic D.
double structural_scale(const MatchProblem& problem);

/// Mean 0/1 agreement over the enabled attributes. Unknown sex and empty
/// affiliation never agree with anything.
Eigen::MatrixXd attribute_prior(std::span<const CharacterRecord* const> chars1,
                                std::span<const CharacterRecord* const> chars2, bool use_sex,
                                bool use_affiliation);
Eigen::MatrixXd attribute_prior(const Corpus& corpus, std::span<const std::string> labels1,
                                std::span<const std::string> labels2, bool use_sex,
                                bool use_affiliation);

/// Fraction of non-seed side-1 characters matched to their counterpart
/// (same name, or the name given by `correspondence`).
double evaluate_matching(const Matching& matching,
                         const std::map<std::string, std::string>& correspondence = {});

}  // namespace storynet
