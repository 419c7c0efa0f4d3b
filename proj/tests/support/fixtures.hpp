#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "storynet/corpus.hpp"
#include "storynet/networks.hpp"

namespace storynet::testkit {

using Rng = std::mt19937_64;

/// Three small adaptations (novels, comics, tvshow) of one six-beat plot.
/// Periods: U1 = first top-level unit of each medium, U2 = both.
CorpusRecords tiny_records();
Corpus tiny_corpus();

/// Gold alignments for the tiny corpus, as CSV text with kind header.
std::string tiny_gold_novels_comics();   // chapter x chapter
std::string tiny_gold_comics_tvshow();   // chapter x episode
std::string tiny_gold_novels_tvshow();   // chapter x episode
/// unit_id,text summaries per medium at the given kind ("chapter" / "episode").
std::string tiny_summaries(std::string_view medium);

struct RandomCorpusSpec {
  int characters = 8;
  int top_levels = 2;
  int units_per_top = 4;
  int interactions = 30;
  int max_count = 3;
};

/// One medium ("novels") with TopLevel books and Chapter units, random
/// interactions between random characters, period "ALL" covering everything.
CorpusRecords random_records(Rng& rng, const RandomCorpusSpec& spec = {});

/// A TV medium: seasons, episodes and scenes with locations drawn from a
/// small pool; roughly one scene in ten has no location.
CorpusRecords random_tv_records(Rng& rng, int seasons, int episodes_per_season, int max_scenes);

void write_corpus(const CorpusRecords& records, const std::filesystem::path& dir);
void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(std::string_view tag);

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double lo = 0.0, double hi = 1.0);
Eigen::MatrixXi random_int_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, int lo, int hi);
/// Symmetric 0/1 adjacency with zero diagonal.
Eigen::MatrixXd random_graph(Rng& rng, int n, double p);
/// Slice over vertices v0..v{n-1} with random integer weights.
NetworkSlice random_slice(Rng& rng, int n, double p, int max_weight = 4);
std::vector<int> random_labels(Rng& rng, int n, int k);
std::vector<int> random_permutation(Rng& rng, int n);

}  // namespace storynet::testkit
