#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "storynet/graph_match.hpp"
#include "storynet/networks.hpp"

namespace storynet {

/// Weighted Jaccard (Ruzicka) similarity: sum of minima over sum of maxima.
/// Two all-zero vectors score 0.
template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar ruzicka(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename DerivedX::Scalar;
  if (x.size() != y.size()) throw std::invalid_argument("ruzicka: length mismatch");
  Scalar lo(0), hi(0);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const Scalar a = x(i), b = static_cast<Scalar>(y(i));
    lo += a < b ? a : b;
    hi += a < b ? b : a;
  }
  return hi == Scalar(0) ? Scalar(0) : lo / hi;
}

/// Character-by-character similarity; rows are side-1 characters, columns side-2.
struct CharSimilarityMatrix {
  std::vector<std::string> rows;
  std::vector<std::string> cols;
  Eigen::MatrixXd values;

  std::optional<Eigen::Index> row_of(std::string_view label) const;
  std::optional<Eigen::Index> col_of(std::string_view label) const;
};

/// Ruzicka similarity between neighbourhood rows of the two graphs over the
/// shared character universe `charset` (absent characters get zero rows).
CharSimilarityMatrix neighborhood_similarity(const NetworkSlice& g1, const NetworkSlice& g2,
                                             std::span<const std::string> charset);

/// Keeps (r, c) when c is the best column of row r and r the best row of
/// column c, with a positive similarity. Argmax ties go to the smaller label.
Matching mutual_best_match(const CharSimilarityMatrix& sim);

/// Mutual-best matching on every slice pair, then the per-character mode of
/// the partners. Without `random_seed`, mode ties go to the earliest first
/// occurrence then the smaller label; with it, ties are drawn at random.
Matching sequential_match(const DynamicNetwork& dyn1, const DynamicNetwork& dyn2,
                          std::span<const std::string> charset,
                          std::optional<std::uint64_t> random_seed = std::nullopt);

/// sim(v1, v2) minus the best alternative sim(v1, v') with v' != v2.
std::vector<double> self_alter_gap(const CharSimilarityMatrix& sim,
                                   std::span<const std::pair<std::string, std::string>> pairs);

}  // namespace storynet
