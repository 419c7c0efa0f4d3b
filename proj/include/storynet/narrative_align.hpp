#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "storynet/corpus.hpp"
#include "storynet/networks.hpp"

namespace storynet {

using BinaryMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Similarity between the unit sequences of two adaptations, rows and
/// columns in ordinal order.
struct UnitSimilarityMatrix {
  std::vector<std::string> rows;
  std::vector<std::string> cols;
  Eigen::MatrixXd values;
  std::string source;
};

/// Reference alignment at declared unit kinds.
struct GoldAlignment {
  UnitKind row_kind = UnitKind::Chapter;
  UnitKind col_kind = UnitKind::Chapter;
  std::vector<std::string> rows;
  std::vector<std::string> cols;
  std::vector<std::pair<int, int>> pairs;

  BinaryMatrix dense() const;
};

/// Reads a sparse gold file (row_unit_id,col_unit_id) preceded by a
/// "# row_kind=<kind>,col_kind=<kind>" line; ids are placed by position in
/// `rows` / `cols`.
GoldAlignment read_gold(const std::filesystem::path& path, std::vector<std::string> rows,
                        std::vector<std::string> cols);
/// The (row, column) kinds declared by a gold file.
std::pair<UnitKind, UnitKind> read_gold_kinds(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Similarity

/// Lowercased ASCII alphanumeric runs (bytes >= 0x80 count as word
/// characters); tokens shorter than two bytes are dropped.
std::vector<std::string> tokenize(std::string_view text);

/// Cosine between TF-IDF vectors; TF = raw count, IDF = ln((1 + N)/(1 + df)) + 1
/// over the union of both document lists.
Eigen::MatrixXd tfidf_similarity(std::span<const std::string> texts_a, std::span<const std::string> texts_b);

/// Cosine similarity between stored embedding rows.
Eigen::MatrixXd embedding_similarity(const Eigen::Ref<const Eigen::MatrixXd>& vectors_a,
                                     const Eigen::Ref<const Eigen::MatrixXd>& vectors_b);

enum class StructureRepr { Vertices, Edges };
enum class StructureWeighting { Jaccard, RuzickaInverse };

/// Slice-by-slice comparison of two dynamic networks restricted to `charset`.
/// RuzickaInverse weights each vertex or edge by 1 / (number of slices of its
/// own network in which it occurs).
UnitSimilarityMatrix structural_similarity(const DynamicNetwork& dyn_a, const DynamicNetwork& dyn_b,
                                           StructureRepr repr, StructureWeighting weighting,
                                           std::span<const std::string> charset);

/// (S - min) / (max - min). A matrix with fewer than two distinct values maps
/// to zeros and sets `degenerate`.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> minmax_normalize(
    const Eigen::MatrixBase<Derived>& S, bool* degenerate = nullptr) {
  using Matrix = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (degenerate) *degenerate = false;
  if (S.size() == 0) return Matrix(S.rows(), S.cols());
  const auto lo = S.minCoeff(), hi = S.maxCoeff();
  if (!(hi > lo)) {
    if (degenerate) *degenerate = true;
    return Matrix::Zero(S.rows(), S.cols());
  }
  return ((S.array() - lo) / (hi - lo)).matrix();
}

/// alpha * normalized structural + (1 - alpha) * normalized textual.
Eigen::MatrixXd hybrid_combine(const Eigen::Ref<const Eigen::MatrixXd>& structural,
                               const Eigen::Ref<const Eigen::MatrixXd>& textual, double alpha);

/// Duplicates coarse rows/columns onto fine units: fine(i, j) = coarse(row_map[i], col_map[j]).
Eigen::MatrixXd extend_matrix(const Eigen::Ref<const Eigen::MatrixXd>& coarse, std::span<const int> row_map,
                              std::span<const int> col_map);

/// Position of each fine unit's `coarse_kind` ancestor within `coarse_ids` (-1 if none).
std::vector<int> ancestor_map(const Corpus& corpus, std::span<const std::string> fine_ids,
                              UnitKind coarse_kind, std::span<const std::string> coarse_ids);

// ---------------------------------------------------------------------------
// Aligners

/// M(i, j) = S(i, j) > t.
template <typename Derived>
BinaryMatrix align_threshold(const Eigen::MatrixBase<Derived>& S, typename Derived::Scalar t) {
  return (S.array() > t);
}

struct SWParams {
  double gap = 0.2;        // g >= 0, charged on vertical/horizontal moves
  double shift = 0.5;      // mu: normalized similarity below it scores negative
  double min_score = 1.0;  // extraction stops below this segment score
  std::optional<int> max_run;  // cap on consecutive vertical or horizontal moves
};

struct AlignmentSegment {
  std::vector<std::pair<int, int>> cells;  // from start to end
  double score = 0.0;
};

struct SWResult {
  BinaryMatrix matches;
  std::vector<AlignmentSegment> segments;
};

/// Many-to-many Smith-Waterman over s = minmax(S) - mu with
///   H(i,j) = max(0, H(i-1,j-1) + s, H(i-1,j) + s - g, H(i,j-1) + s - g).
/// Segments are extracted repeatedly from the best cell (ties: first in
/// row-major order); visited cells with s > 0 become matches and every
/// visited cell is blocked before the table is recomputed.
SWResult smith_waterman(const Eigen::Ref<const Eigen::MatrixXd>& S, const SWParams& params);
BinaryMatrix align_smith_waterman(const Eigen::Ref<const Eigen::MatrixXd>& S, const SWParams& params);

/// Coarse cell is set when any fine cell mapping onto it is set.
BinaryMatrix coarsen_alignment(const BinaryMatrix& fine, std::span<const int> row_map,
                               std::span<const int> col_map, Eigen::Index coarse_rows,
                               Eigen::Index coarse_cols);

// ---------------------------------------------------------------------------
// Evaluation and tuning

struct F1Score {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

F1Score evaluate_f1(const BinaryMatrix& predicted, const BinaryMatrix& gold);

/// Percent rounded to two decimals.
inline double percent(double fraction) { return std::round(fraction * 10000.0) / 100.0; }

enum class WindowSide { Columns, Rows };

/// F1 restricted to the columns (or rows) of each window; `window_of[k]` is
/// the window of column (row) k, windows numbered 0..W-1.
std::vector<F1Score> per_window_f1(const BinaryMatrix& predicted, const BinaryMatrix& gold,
                                   std::span<const int> window_of, WindowSide side = WindowSide::Columns);

enum class Aligner { Threshold, SmithWaterman };

struct AlignParams {
  Aligner aligner = Aligner::SmithWaterman;
  double alpha = 1.0;
  double threshold = 0.5;
  SWParams sw;
};

/// Fine-to-coarse projection applied to an alignment before scoring.
struct Coarsening {
  std::vector<int> row_map;
  std::vector<int> col_map;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
};

/// One media pair: similarity sources at alignment kinds and gold at evaluation kinds.
struct TuningPair {
  std::string name;
  std::optional<Eigen::MatrixXd> structural;
  std::optional<Eigen::MatrixXd> textual;
  BinaryMatrix gold;
  std::optional<Coarsening> coarsening;

  /// Normalized similarity for a given alpha (alpha ignored unless both sources exist).
  Eigen::MatrixXd similarity(double alpha) const;
};

struct TuningGrid {
  std::vector<double> alphas;
  std::size_t threshold_quantiles = 50;
  std::vector<double> gaps;
  std::vector<double> shifts;
  std::vector<double> min_scores;

  static TuningGrid defaults();
};

/// Alignment of one pair under fixed parameters, projected to evaluation kinds.
BinaryMatrix align_pair(const TuningPair& pair, const AlignParams& params);

struct TuningResult {
  AlignParams params;
  double mean_f1 = 0.0;
};

/// Grid search maximizing mean F1 over the development pairs. Grid order is
/// lexicographic in (alpha, threshold) or (alpha, gap, shift, min_score); the
/// first maximizer wins. Thresholds are quantiles (levels k/(q-1)) of the pooled
/// normalized development similarities.
TuningResult tune_params(std::span<const TuningPair> development, Aligner aligner, const TuningGrid& grid);

struct HeldOutResult {
  std::string target;
  TuningResult tuned;
  F1Score score;
};

/// Tunes on all pairs but one and scores the held-out pair, for every pair.
std::vector<HeldOutResult> leave_one_pair_out(std::span<const TuningPair> pairs, Aligner aligner,
                                              const TuningGrid& grid);

}  // namespace storynet
