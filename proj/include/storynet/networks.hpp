#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "storynet/corpus.hpp"

namespace storynet {

/// Undirected weighted edge; `a < b` index into NetworkSlice::vertices.
struct Edge {
  std::size_t a = 0;
  std::size_t b = 0;
  long raw_weight = 0;
  double norm_weight = 0.0;
};

/// Weighted undirected character graph integrated over a set of units.
struct NetworkSlice {
  std::vector<std::string> vertices;  // sorted ascending
  std::vector<Edge> edges;            // sorted by (a, b)
  std::vector<std::string> covered_units;

  std::size_t order() const { return vertices.size(); }
  std::size_t size() const { return edges.size(); }
  std::optional<std::size_t> index_of(std::string_view name) const;
  long raw_weight(std::string_view a, std::string_view b) const;

  /// Builds a slice from name-pair tallies. Pairs are stored in canonical
  /// order and normalized by the maximum raw weight.
  static NetworkSlice from_tallies(const std::map<std::pair<std::string, std::string>, long>& tallies,
                                   std::vector<std::string> vertices,
                                   std::vector<std::string> covered_units = {});
};

enum class WeightKind { Raw, Normalized, Binary };

/// Dense adjacency in vertex order.
Eigen::MatrixXd adjacency(const NetworkSlice& slice, WeightKind weights = WeightKind::Normalized);
/// Dense adjacency over an explicit universe; names missing from the slice
/// get zero rows and columns, slice vertices outside the universe are dropped.
Eigen::MatrixXd adjacency(const NetworkSlice& slice, std::span<const std::string> universe,
                          WeightKind weights = WeightKind::Normalized);

enum class SliceMode { Instant, Cumulative };

struct DynamicNetwork {
  SliceMode mode = SliceMode::Instant;
  std::string medium;
  UnitKind unit_kind = UnitKind::Chapter;
  std::string period;
  std::vector<std::string> unit_ids;  // one per slice, ordinal order
  std::vector<NetworkSlice> slices;
};

/// Optional restriction of the vertex set; std::nullopt keeps every character.
using CharacterFilter = std::optional<std::vector<std::string>>;

NetworkSlice build_static(const Corpus& corpus, std::string_view medium, const PeriodSpec& period,
                          const CharacterFilter& charset = std::nullopt, bool include_isolates = false);

DynamicNetwork build_dynamic(const Corpus& corpus, std::string_view medium, UnitKind unit_kind,
                             const PeriodSpec& period, const CharacterFilter& charset,
                             SliceMode mode, bool include_isolates = false);

/// Groups the TV scenes of `tv_medium` into blocks: maximal runs of scenes
/// sharing a location inside one episode. Scenes without a location become
/// singleton blocks (one warning each). Existing blocks of the medium are replaced.
Corpus segment_blocks(const Corpus& corpus, std::string_view tv_medium,
                      std::vector<std::string>* warnings = nullptr);

struct GraphStats {
  std::size_t n = 0;
  std::size_t L = 0;
  double density = 0.0;
  double mean_degree = 0.0;
  double mean_path_length = 0.0;  // largest connected component, unit edge lengths
  double clustering = 0.0;        // mean local clustering, 0 for degree < 2
  double assortativity = 0.0;     // 0 when degree variance over edge ends vanishes
  double modularity = 0.0;        // greedy agglomerative partition
};

GraphStats compute_stats(const NetworkSlice& slice);

/// Community label per vertex from deterministic greedy (CNM-style)
/// modularity agglomeration on the unweighted graph.
std::vector<int> greedy_modularity_partition(const NetworkSlice& slice);
double modularity(const NetworkSlice& slice, std::span<const int> community);

}  // namespace storynet
