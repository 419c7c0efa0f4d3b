#include "storynet/similarity_match.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <random>

namespace storynet {

std::optional<Eigen::Index> CharSimilarityMatrix::row_of(std::string_view label) const {
  const auto it = std::find(rows.begin(), rows.end(), label);
  if (it == rows.end()) return std::nullopt;
  return static_cast<Eigen::Index>(it - rows.begin());
}

std::optional<Eigen::Index> CharSimilarityMatrix::col_of(std::string_view label) const {
  const auto it = std::find(cols.begin(), cols.end(), label);
  if (it == cols.end()) return std::nullopt;
  return static_cast<Eigen::Index>(it - cols.begin());
}

CharSimilarityMatrix neighborhood_similarity(const NetworkSlice& g1, const NetworkSlice& g2,
                                             std::span<const std::string> charset) {
  if (charset.empty()) throw std::invalid_argument("neighborhood_similarity: empty character universe");
  const Eigen::MatrixXd A1 = adjacency(g1, charset, WeightKind::Normalized);
  const Eigen::MatrixXd A2 = adjacency(g2, charset, WeightKind::Normalized);
  CharSimilarityMatrix sim;
  sim.rows.assign(charset.begin(), charset.end());
  sim.cols = sim.rows;
  const Eigen::Index n = A1.rows();
  sim.values.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) sim.values(i, j) = ruzicka(A1.row(i), A2.row(j));
  return sim;
}

Matching mutual_best_match(const CharSimilarityMatrix& sim) {
  const Eigen::Index n1 = sim.values.rows(), n2 = sim.values.cols();
  auto better_col = [&](Eigen::Index r, Eigen::Index a, Eigen::Index b) {
    const double va = sim.values(r, a), vb = sim.values(r, b);
    return va != vb ? va > vb : sim.cols[a] < sim.cols[b];
  };
  auto better_row = [&](Eigen::Index c, Eigen::Index a, Eigen::Index b) {
    const double va = sim.values(a, c), vb = sim.values(b, c);
    return va != vb ? va > vb : sim.rows[a] < sim.rows[b];
  };
  std::vector<Eigen::Index> row_best(n1, -1), col_best(n2, -1);
  for (Eigen::Index r = 0; r < n1; ++r)
    for (Eigen::Index c = 0; c < n2; ++c)
      if (row_best[r] < 0 || better_col(r, c, row_best[r])) row_best[r] = c;
  for (Eigen::Index c = 0; c < n2; ++c)
    for (Eigen::Index r = 0; r < n1; ++r)
      if (col_best[c] < 0 || better_row(c, r, col_best[c])) col_best[c] = r;

  Matching m;
  m.labels1 = sim.rows;
  m.labels2 = sim.cols;
  m.map.assign(n1, -1);
  m.confidence.assign(n1, 0.0);
  m.seed.assign(n1, false);
  m.method = "ruzicka-mutual-best";
  for (Eigen::Index r = 0; r < n1; ++r) {
    const Eigen::Index c = row_best[r];
    if (c >= 0 && col_best[c] == r && sim.values(r, c) > 0.0) {
      m.map[r] = static_cast<int>(c);
      m.confidence[r] = sim.values(r, c);
    }
  }
  return m;
}

Matching sequential_match(const DynamicNetwork& dyn1, const DynamicNetwork& dyn2,
                          std::span<const std::string> charset, std::optional<std::uint64_t> random_seed) {
  if (dyn1.slices.size() != dyn2.slices.size())
    throw std::invalid_argument("sequential_match: dynamic networks have " +
                                std::to_string(dyn1.slices.size()) + " and " +
                                std::to_string(dyn2.slices.size()) + " slices");
  const std::size_t n = charset.size();
  struct Tally {
    int count = 0;
    std::size_t first_seen = 0;
  };
  std::vector<std::map<int, Tally>> partners(n);
  for (std::size_t t = 0; t < dyn1.slices.size(); ++t) {
    const Matching m = mutual_best_match(neighborhood_similarity(dyn1.slices[t], dyn2.slices[t], charset));
    for (std::size_t i = 0; i < n; ++i) {
      if (m.map[i] < 0) continue;
      auto [it, inserted] = partners[i].try_emplace(m.map[i], Tally{0, t});
      ++it->second.count;
    }
  }

  std::optional<std::mt19937_64> rng;
  if (random_seed) rng.emplace(*random_seed);

  std::vector<int> choice(n, -1), votes(n, 0);
  const std::vector<std::string> labels(charset.begin(), charset.end());
  for (std::size_t i = 0; i < n; ++i) {
    if (partners[i].empty()) continue;
    int best_count = 0;
    for (const auto& [j, tally] : partners[i]) best_count = std::max(best_count, tally.count);
    std::vector<int> tied;
    for (const auto& [j, tally] : partners[i])
      if (tally.count == best_count) tied.push_back(j);
    if (rng) {
      std::uniform_int_distribution<std::size_t> pick(0, tied.size() - 1);
      choice[i] = tied[pick(*rng)];
    } else {
      choice[i] = *std::min_element(tied.begin(), tied.end(), [&](int a, int b) {
        const auto& ta = partners[i].at(a);
        const auto& tb = partners[i].at(b);
        return ta.first_seen != tb.first_seen ? ta.first_seen < tb.first_seen : labels[a] < labels[b];
      });
    }
    votes[i] = best_count;
  }

  // Injectivity: a partner claimed twice goes to the higher vote, then the smaller label.
  std::map<int, int> holder;
  for (std::size_t i = 0; i < n; ++i) {
    if (choice[i] < 0) continue;
    const auto it = holder.find(choice[i]);
    if (it == holder.end()) {
      holder.emplace(choice[i], static_cast<int>(i));
      continue;
    }
    const int other = it->second;
    if (votes[i] > votes[other] || (votes[i] == votes[other] && labels[i] < labels[other])) it->second = static_cast<int>(i);
  }

  Matching out;
  out.labels1 = labels;
  out.labels2 = labels;
  out.map.assign(n, -1);
  out.confidence.assign(n, 0.0);
  out.seed.assign(n, false);
  out.method = "ruzicka-sequential";
  const double slices = static_cast<double>(std::max<std::size_t>(dyn1.slices.size(), 1));
  for (const auto& [j, i] : holder) {
    out.map[i] = j;
    out.confidence[i] = votes[i] / slices;
  }
  out.config = {{"slices", dyn1.slices.size()},
                {"mode", dyn1.mode == SliceMode::Instant ? "instant" : "cumulative"}};
  if (random_seed) out.config["random_seed"] = *random_seed;
  return out;
}

std::vector<double> self_alter_gap(const CharSimilarityMatrix& sim,
                                   std::span<const std::pair<std::string, std::string>> pairs) {
  std::vector<double> gaps;
  for (const auto& [side1, side2] : pairs) {
    const auto r = sim.row_of(side1);
    const auto c = sim.col_of(side2);
    if (!r || !c)
      throw std::invalid_argument("self_alter_gap: '" + side1 + "' / '" + side2 + "' missing from the matrix");
    double alternative = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < sim.values.cols(); ++j)
      if (j != *c) alternative = std::max(alternative, sim.values(*r, j));
    if (sim.values.cols() == 1) alternative = 0.0;
    gaps.push_back(sim.values(*r, *c) - alternative);
  }
  return gaps;
}

}  // namespace storynet
