#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "storynet/networks.hpp"

namespace storynet {

inline constexpr std::size_t kMetricCount = 8;
inline constexpr std::array<std::string_view, kMetricCount> kMetricNames{
    "degree",    "strength",           "betweenness", "betweenness_weighted",
    "closeness", "closeness_weighted", "eigenvector", "eigenvector_weighted"};

using ProfileMatrix = Eigen::Matrix<double, Eigen::Dynamic, static_cast<int>(kMetricCount)>;

/// Eight centralities per character, raw and z-scored over the profiled set.
struct CentralityProfile {
  std::vector<std::string> characters;
  ProfileMatrix raw;
  ProfileMatrix z;
};

/// Conversion of edge weights into path lengths for the weighted metrics.
enum class PathLength { InverseNormalized, InverseRaw };

/// Unweighted metrics ignore weights; weighted shortest paths use the chosen
/// length convention, weighted eigenvector uses normalized weights. Closeness
/// is harmonic (sum of inverse distances, unreachable pairs contribute 0).
CentralityProfile compute_profiles(const NetworkSlice& slice, std::span<const std::string> charset,
                                   PathLength lengths = PathLength::InverseNormalized);

/// Column-wise z-scores (population standard deviation); constant columns become zeros.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Derived::ColsAtCompileTime> zscore_columns(
    const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Derived::ColsAtCompileTime> out(m.rows(), m.cols());
  const Scalar n = static_cast<Scalar>(m.rows());
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const Scalar mean = m.col(c).sum() / n;
    const auto centred = (m.col(c).array() - mean).eval();
    const Scalar sd = std::sqrt(centred.square().sum() / n);
    if (sd <= Scalar(1e-12) * std::max(Scalar(1), std::abs(mean)))
      out.col(c).setZero();
    else
      out.col(c) = (centred / sd).matrix();
  }
  return out;
}

/// Fractional ranks (1-based, ties share their average rank).
Eigen::VectorXd average_ranks(const Eigen::Ref<const Eigen::VectorXd>& values);

/// Spearman correlation between the columns of `data` (at least 3 rows).
/// Constant columns correlate 0 with everything but themselves.
Eigen::MatrixXd spearman_matrix(const Eigen::Ref<const Eigen::MatrixXd>& data);
Eigen::MatrixXd spearman_matrix(const CentralityProfile& profiles);

enum class Linkage { Average, Complete, Single, Ward };

std::optional<Linkage> parse_linkage(std::string_view text);

struct Dendrogram {
  struct Merge {
    int a;  // surviving cluster (smaller index)
    int b;
    double height;
  };
  int points = 0;
  std::vector<Merge> merges;

  /// Labels 0..k-1 numbered by first appearance in point order.
  std::vector<int> cut(int k) const;
};

/// Agglomerative clustering on Euclidean distances between rows. Ties merge
/// the lexicographically smallest cluster pair first.
Dendrogram agglomerate(const Eigen::Ref<const Eigen::MatrixXd>& points, Linkage linkage);

/// Mean silhouette; members of singleton clusters score 0.
double mean_silhouette(const Eigen::Ref<const Eigen::MatrixXd>& points, std::span<const int> labels);

struct Partition {
  std::vector<std::string> elements;
  std::vector<int> cluster;
};

/// Clusters z-scored profiles. Without `k`, the cut maximizing the mean
/// silhouette over k in [2, min(10, n - 1)] is used (ties: smaller k).
Partition cluster_profiles(const CentralityProfile& profiles, std::optional<int> k = std::nullopt,
                           Linkage linkage = Linkage::Average);

double ari(std::span<const int> p1, std::span<const int> p2);
/// Partitions over the same element set, possibly listed in different orders.
double ari(const Partition& p1, const Partition& p2);

/// Per-cluster mean z-scored profile, rows ordered by cluster id.
Eigen::MatrixXd cluster_centroids(const CentralityProfile& profiles, const Partition& partition);

}  // namespace storynet
