#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "storynet/centrality.hpp"
#include "storynet/graph_match.hpp"
#include "storynet/narrative_align.hpp"
#include "storynet/networks.hpp"

namespace storynet::io {

/// Writes through a sibling temporary file and renames it into place.
void write_atomic(const std::filesystem::path& path, std::string_view content);
void write_json(const std::filesystem::path& path, const nlohmann::json& value);

std::string edge_list_csv(const NetworkSlice& slice);
/// One row per edge per slice: slice,unit_id,char_a,char_b,raw_weight,norm_weight.
std::string dynamic_csv(const DynamicNetwork& dyn);
/// Sidecar metadata: mode, unit kind, covered unit ids and topology statistics.
nlohmann::json slice_summary(const NetworkSlice& slice, std::string_view medium, std::string_view period);
nlohmann::json dynamic_summary(const DynamicNetwork& dyn);

/// char_side1,char_side2,confidence,is_seed for matched characters.
std::string matching_csv(const Matching& m);
/// Reads name_side1,name_side2 (or char_side1,char_side2) pairs.
std::map<std::string, std::string> read_correspondence(const std::filesystem::path& path);

std::string matrix_csv(std::span<const std::string> rows, std::span<const std::string> cols,
                       const Eigen::Ref<const Eigen::MatrixXd>& values, std::string_view corner = "");
/// Plain (P2) grayscale image, min-max scaled, bright = high.
std::string pgm_heatmap(const Eigen::Ref<const Eigen::MatrixXd>& values);
std::string pgm_binary(const BinaryMatrix& cells);
/// Four gray levels: TN black, FN dark, FP light, TP white.
std::string pgm_confusion(const BinaryMatrix& predicted, const BinaryMatrix& gold);

std::string profiles_csv(const CentralityProfile& profiles);
std::string partition_csv(const Partition& partition);
/// cluster,<metric...> rows of mean z-scored profiles, for radar plots.
std::string centroids_csv(const Eigen::Ref<const Eigen::MatrixXd>& centroids);

/// Sparse row_unit_id,col_unit_id listing of set cells.
std::string alignment_csv(std::span<const std::string> rows, std::span<const std::string> cols,
                          const BinaryMatrix& cells);

/// unit_id,text
std::map<std::string, std::string> read_summaries(const std::filesystem::path& path);
/// unit_id followed by one column per dimension.
std::map<std::string, Eigen::VectorXd> read_embeddings(const std::filesystem::path& path);

}  // namespace storynet::io
