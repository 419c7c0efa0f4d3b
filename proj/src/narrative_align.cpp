#include "storynet/narrative_align.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <map>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

#include "storynet/csv.hpp"

namespace storynet {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<UnitKind> kind_from_comment(const std::vector<std::string>& comments, std::string_view key) {
  for (const auto& line : comments) {
    std::size_t pos = 0;
    while ((pos = line.find(key, pos)) != std::string::npos) {
      const bool boundary = pos == 0 || line[pos - 1] == ' ' || line[pos - 1] == '#' || line[pos - 1] == ',' ||
                            line[pos - 1] == ';';
      pos += key.size();
      if (!boundary || pos >= line.size() || line[pos] != '=') continue;
      const auto end = line.find_first_of(",; \t", pos + 1);
      return parse_unit_kind(trim(line.substr(pos + 1, end == std::string::npos ? end : end - pos - 1)));
    }
  }
  return std::nullopt;
}

void check_map(std::span<const int> map, Eigen::Index limit, const char* what) {
  for (std::size_t k = 0; k < map.size(); ++k)
    if (map[k] < 0 || map[k] >= limit)
      throw std::invalid_argument(std::string(what) + ": unit " + std::to_string(k) + " has no coarse parent");
}

}  // namespace

BinaryMatrix GoldAlignment::dense() const {
  BinaryMatrix m = BinaryMatrix::Constant(static_cast<Eigen::Index>(rows.size()),
                                          static_cast<Eigen::Index>(cols.size()), false);
  for (const auto& [r, c] : pairs) m(r, c) = true;
  return m;
}

namespace {

std::pair<UnitKind, UnitKind> declared_kinds(const csv::Table& table) {
  const auto row_kind = kind_from_comment(table.comments, "row_kind");
  const auto col_kind = kind_from_comment(table.comments, "col_kind");
  if (!row_kind || !col_kind)
    throw csv::FileError(table.source, 1, "gold file must declare row_kind and col_kind in a leading comment");
  return {*row_kind, *col_kind};
}

}  // namespace

std::pair<UnitKind, UnitKind> read_gold_kinds(const std::filesystem::path& path) {
  return declared_kinds(csv::read_file(path));
}

GoldAlignment read_gold(const std::filesystem::path& path, std::vector<std::string> rows,
                        std::vector<std::string> cols) {
  const csv::Table table = csv::read_file(path);
  GoldAlignment gold;
  std::tie(gold.row_kind, gold.col_kind) = declared_kinds(table);
  const std::size_t rc = table.require_column("row_unit_id");
  const std::size_t cc = table.require_column("col_unit_id");
  std::unordered_map<std::string, int> row_index, col_index;
  for (std::size_t i = 0; i < rows.size(); ++i) row_index.emplace(rows[i], static_cast<int>(i));
  for (std::size_t j = 0; j < cols.size(); ++j) col_index.emplace(cols[j], static_cast<int>(j));
  for (const auto& row : table.rows) {
    const auto r = row_index.find(row.fields[rc]);
    const auto c = col_index.find(row.fields[cc]);
    if (r == row_index.end())
      throw csv::FileError(path.string(), row.line, "unknown row unit '" + row.fields[rc] + "'");
    if (c == col_index.end())
      throw csv::FileError(path.string(), row.line, "unknown column unit '" + row.fields[cc] + "'");
    gold.pairs.emplace_back(r->second, c->second);
  }
  std::sort(gold.pairs.begin(), gold.pairs.end());
  gold.pairs.erase(std::unique(gold.pairs.begin(), gold.pairs.end()), gold.pairs.end());
  gold.rows = std::move(rows);
  gold.cols = std::move(cols);
  return gold;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (current.size() >= 2) tokens.push_back(current);
    current.clear();
  };
  for (const char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (u >= 0x80 || (u >= '0' && u <= '9') || (u >= 'a' && u <= 'z')) {
      current.push_back(ch);
    } else if (u >= 'A' && u <= 'Z') {
      current.push_back(static_cast<char>(u - 'A' + 'a'));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

Eigen::MatrixXd tfidf_similarity(std::span<const std::string> texts_a, std::span<const std::string> texts_b) {
  std::map<std::string, int> vocabulary;
  std::vector<std::map<int, double>> counts;
  auto add = [&](const std::string& text) {
    std::map<int, double> tf;
    for (auto& token : tokenize(text)) {
      const auto [it, inserted] = vocabulary.try_emplace(std::move(token), static_cast<int>(vocabulary.size()));
      tf[it->second] += 1.0;
    }
    counts.push_back(std::move(tf));
  };
  for (const auto& t : texts_a) add(t);
  for (const auto& t : texts_b) add(t);

  std::vector<double> df(vocabulary.size(), 0.0);
  for (const auto& doc : counts)
    for (const auto& [term, tf] : doc) df[term] += 1.0;
  const double N = static_cast<double>(counts.size());

  // Sparse vectors as sorted (term, weight) lists, pre-normalized.
  std::vector<std::vector<std::pair<int, double>>> vectors(counts.size());
  for (std::size_t d = 0; d < counts.size(); ++d) {
    double norm = 0.0;
    for (const auto& [term, tf] : counts[d]) {
      const double w = tf * (std::log((1.0 + N) / (1.0 + df[term])) + 1.0);
      vectors[d].emplace_back(term, w);
      norm += w * w;
    }
    norm = std::sqrt(norm);
    for (auto& [term, w] : vectors[d]) w /= norm;
  }
  const auto na = static_cast<Eigen::Index>(texts_a.size()), nb = static_cast<Eigen::Index>(texts_b.size());
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(na, nb);
  for (Eigen::Index i = 0; i < na; ++i) {
    const auto& x = vectors[i];
    for (Eigen::Index j = 0; j < nb; ++j) {
      const auto& y = vectors[na + j];
      double dot = 0.0;
      auto p = x.begin();
      auto q = y.begin();
      while (p != x.end() && q != y.end()) {
        if (p->first < q->first) {
          ++p;
        } else if (q->first < p->first) {
          ++q;
        } else {
          dot += p->second * q->second;
          ++p;
          ++q;
        }
      }
      S(i, j) = dot;
    }
  }
  return S;
}

Eigen::MatrixXd embedding_similarity(const Eigen::Ref<const Eigen::MatrixXd>& vectors_a,
                                     const Eigen::Ref<const Eigen::MatrixXd>& vectors_b) {
  if (vectors_a.cols() != vectors_b.cols())
    throw std::invalid_argument("embedding_similarity: dimension mismatch (" + std::to_string(vectors_a.cols()) +
                                " vs " + std::to_string(vectors_b.cols()) + ")");
  auto unit_rows = [](const Eigen::Ref<const Eigen::MatrixXd>& v, const char* side) {
    Eigen::MatrixXd out = v;
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
      const double n = out.row(r).norm();
      if (!(n > 0.0))
        throw std::invalid_argument(std::string("embedding_similarity: zero vector in ") + side + " row " +
                                    std::to_string(r));
      out.row(r) /= n;
    }
    return out;
  };
  return unit_rows(vectors_a, "first") * unit_rows(vectors_b, "second").transpose();
}

UnitSimilarityMatrix structural_similarity(const DynamicNetwork& dyn_a, const DynamicNetwork& dyn_b,
                                           StructureRepr repr, StructureWeighting weighting,
                                           std::span<const std::string> charset) {
  if (charset.empty()) throw std::invalid_argument("structural_similarity: empty character set");
  std::vector<std::string> members(charset.begin(), charset.end());
  std::sort(members.begin(), members.end());
  auto member = [&](const std::string& name) { return std::binary_search(members.begin(), members.end(), name); };

  std::unordered_map<std::string, int> universe;
  auto elements_of = [&](const NetworkSlice& slice) {
    std::vector<int> ids;
    auto intern = [&](std::string key) {
      const auto [it, inserted] = universe.try_emplace(std::move(key), static_cast<int>(universe.size()));
      ids.push_back(it->second);
    };
    if (repr == StructureRepr::Vertices) {
      for (const auto& v : slice.vertices)
        if (member(v)) intern(v);
    } else {
      for (const auto& e : slice.edges) {
        const auto& a = slice.vertices[e.a];
        const auto& b = slice.vertices[e.b];
        if (member(a) && member(b)) intern(a + '\x1f' + b);
      }
    }
    std::sort(ids.begin(), ids.end());
    return ids;
  };
  std::vector<std::vector<int>> sets_a, sets_b;
  for (const auto& s : dyn_a.slices) sets_a.push_back(elements_of(s));
  for (const auto& s : dyn_b.slices) sets_b.push_back(elements_of(s));

  std::vector<double> weight_a(universe.size(), 0.0), weight_b(universe.size(), 0.0);
  for (const auto& s : sets_a)
    for (int e : s) weight_a[e] += 1.0;
  for (const auto& s : sets_b)
    for (int e : s) weight_b[e] += 1.0;
  for (auto& w : weight_a) w = w > 0 ? 1.0 / w : 0.0;
  for (auto& w : weight_b) w = w > 0 ? 1.0 / w : 0.0;

  const bool inverse = weighting == StructureWeighting::RuzickaInverse;
  UnitSimilarityMatrix out;
  out.rows = dyn_a.unit_ids;
  out.cols = dyn_b.unit_ids;
  out.source = std::string(repr == StructureRepr::Vertices ? "vertices" : "edges") + "/" +
               (inverse ? "ruzicka-inverse" : "jaccard");
  out.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sets_a.size()),
                                     static_cast<Eigen::Index>(sets_b.size()));
  for (std::size_t i = 0; i < sets_a.size(); ++i) {
    for (std::size_t j = 0; j < sets_b.size(); ++j) {
      const auto& x = sets_a[i];
      const auto& y = sets_b[j];
      double lo = 0.0, hi = 0.0;
      auto p = x.begin();
      auto q = y.begin();
      while (p != x.end() || q != y.end()) {
        if (q == y.end() || (p != x.end() && *p < *q)) {
          hi += inverse ? weight_a[*p] : 1.0;
          ++p;
        } else if (p == x.end() || *q < *p) {
          hi += inverse ? weight_b[*q] : 1.0;
          ++q;
        } else {
          const double wa = inverse ? weight_a[*p] : 1.0, wb = inverse ? weight_b[*q] : 1.0;
          lo += std::min(wa, wb);
          hi += std::max(wa, wb);
          ++p;
          ++q;
        }
      }
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = hi > 0.0 ? lo / hi : 0.0;
    }
  }
  return out;
}

Eigen::MatrixXd hybrid_combine(const Eigen::Ref<const Eigen::MatrixXd>& structural,
                               const Eigen::Ref<const Eigen::MatrixXd>& textual, double alpha) {
  if (structural.rows() != textual.rows() || structural.cols() != textual.cols())
    throw std::invalid_argument("hybrid_combine: matrices differ in shape");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("hybrid_combine: alpha outside [0, 1]");
  return alpha * minmax_normalize(structural) + (1.0 - alpha) * minmax_normalize(textual);
}

Eigen::MatrixXd extend_matrix(const Eigen::Ref<const Eigen::MatrixXd>& coarse, std::span<const int> row_map,
                              std::span<const int> col_map) {
  check_map(row_map, coarse.rows(), "extend_matrix");
  check_map(col_map, coarse.cols(), "extend_matrix");
  Eigen::MatrixXd fine(static_cast<Eigen::Index>(row_map.size()), static_cast<Eigen::Index>(col_map.size()));
  for (Eigen::Index i = 0; i < fine.rows(); ++i)
    for (Eigen::Index j = 0; j < fine.cols(); ++j) fine(i, j) = coarse(row_map[i], col_map[j]);
  return fine;
}

std::vector<int> ancestor_map(const Corpus& corpus, std::span<const std::string> fine_ids, UnitKind coarse_kind,
                              std::span<const std::string> coarse_ids) {
  std::unordered_map<std::string, int> position;
  for (std::size_t k = 0; k < coarse_ids.size(); ++k) position.emplace(coarse_ids[k], static_cast<int>(k));
  std::vector<int> map;
  map.reserve(fine_ids.size());
  for (const auto& id : fine_ids) {
    const NarrativeUnit* unit = corpus.find_unit(id);
    if (!unit) throw std::invalid_argument("ancestor_map: unknown unit '" + id + "'");
    const NarrativeUnit* parent = corpus.ancestor(*unit, coarse_kind);
    const auto it = parent ? position.find(parent->id) : position.end();
    map.push_back(it == position.end() ? -1 : it->second);
  }
  return map;
}

// ---------------------------------------------------------------------------
// Smith-Waterman

namespace {

struct SegmentPath {
  std::vector<std::pair<int, int>> cells;
  double score = 0.0;
};

class PlainTable {
 public:
  PlainTable(const Eigen::MatrixXd& s, double gap)
      : s_(s), g_(gap), H_(Eigen::MatrixXd::Zero(s.rows() + 1, s.cols() + 1)),
        blocked_(BinaryMatrix::Constant(s.rows(), s.cols(), false)) {
    refresh(1, 1, s.rows());
  }

  // Best unblocked cell, first in row-major order on ties.
  std::pair<double, std::pair<int, int>> best() const {
    double value = 0.0;
    std::pair<int, int> where{-1, -1};
    for (Eigen::Index i = 1; i < H_.rows(); ++i)
      for (Eigen::Index j = 1; j < H_.cols(); ++j)
        if (H_(i, j) > value) {
          value = H_(i, j);
          where = {static_cast<int>(i), static_cast<int>(j)};
        }
    return {value, where};
  }

  SegmentPath trace(int i, int j) const {
    SegmentPath path;
    path.score = H_(i, j);
    while (i > 0 && j > 0 && H_(i, j) > 0.0) {
      path.cells.emplace_back(i - 1, j - 1);
      const double h = H_(i, j), s = s_(i - 1, j - 1);
      if (h == H_(i - 1, j - 1) + s) {
        --i;
        --j;
      } else if (h == H_(i - 1, j) + s - g_) {
        --i;
      } else {
        --j;
      }
    }
    std::reverse(path.cells.begin(), path.cells.end());
    return path;
  }

  void block(const SegmentPath& path) {
    for (const auto& [r, c] : path.cells) blocked_(r, c) = true;
    const auto& [r0, c0] = path.cells.front();
    refresh(r0 + 1, c0 + 1, path.cells.back().first + 1);
  }

 private:
  double value(Eigen::Index i, Eigen::Index j) const {
    if (blocked_(i - 1, j - 1)) return 0.0;
    const double s = s_(i - 1, j - 1);
    return std::max({0.0, H_(i - 1, j - 1) + s, H_(i - 1, j) + s - g_, H_(i, j - 1) + s - g_});
  }

  // Cells up-left of (i0, j0) cannot change; below the last blocked row an
  // unchanged row ends the propagation.
  void refresh(Eigen::Index i0, Eigen::Index j0, Eigen::Index last_blocked_row) {
    for (Eigen::Index i = i0; i < H_.rows(); ++i) {
      bool changed = false;
      for (Eigen::Index j = j0; j < H_.cols(); ++j) {
        const double v = value(i, j);
        if (v != H_(i, j)) {
          H_(i, j) = v;
          changed = true;
        }
      }
      if (!changed && i > last_blocked_row) break;
    }
  }

  const Eigen::MatrixXd& s_;
  double g_;
  Eigen::MatrixXd H_;
  BinaryMatrix blocked_;
};

// Same recurrence with runs of vertical (or horizontal) moves capped at R.
// State 0 ends with a diagonal step or a fresh start; states 1..R end with r
// vertical steps, R+1..2R with r horizontal steps.
class RunLimitedTable {
 public:
  RunLimitedTable(const Eigen::MatrixXd& s, double gap, int max_run)
      : s_(s), g_(gap), R_(max_run), blocked_(BinaryMatrix::Constant(s.rows(), s.cols(), false)) {
    states_.assign(1 + 2 * R_, Eigen::MatrixXd::Constant(s.rows() + 1, s.cols() + 1, kNegInf));
    V_ = Eigen::MatrixXd::Zero(s.rows() + 1, s.cols() + 1);
    recompute();
  }

  std::pair<double, std::pair<int, int>> best() const {
    double value = 0.0;
    std::pair<int, int> where{-1, -1};
    for (Eigen::Index i = 1; i < V_.rows(); ++i)
      for (Eigen::Index j = 1; j < V_.cols(); ++j)
        if (V_(i, j) > value) {
          value = V_(i, j);
          where = {static_cast<int>(i), static_cast<int>(j)};
        }
    return {value, where};
  }

  SegmentPath trace(int i, int j) const {
    SegmentPath path;
    path.score = V_(i, j);
    int state = argmax_state(i, j, 0, 2 * R_);
    while (i > 0 && j > 0 && state >= 0) {
      path.cells.emplace_back(i - 1, j - 1);
      if (state == 0) {
        --i;
        --j;
        state = (i > 0 && j > 0 && V_(i, j) > 0.0) ? argmax_state(i, j, 0, 2 * R_) : -1;
      } else if (state <= R_) {
        --i;
        state = state > 1 ? state - 1 : entry_state(i, j, true);
      } else {
        --j;
        state = state > R_ + 1 ? state - 1 : entry_state(i, j, false);
      }
    }
    std::reverse(path.cells.begin(), path.cells.end());
    return path;
  }

  void block(const SegmentPath& path) {
    for (const auto& [r, c] : path.cells) blocked_(r, c) = true;
    recompute();
  }

 private:
  int argmax_state(int i, int j, int lo, int hi) const {
    int arg = -1;
    double best = kNegInf;
    for (int k = lo; k <= hi; ++k)
      if (states_[k](i, j) > best) {
        best = states_[k](i, j);
        arg = k;
      }
    return arg;
  }

  // Predecessor of the first step of a vertical (horizontal) run: the diagonal
  // state or any run in the other direction.
  int entry_state(int i, int j, bool vertical) const {
    int arg = 0;
    double best = states_[0](i, j);
    const int lo = vertical ? R_ + 1 : 1, hi = vertical ? 2 * R_ : R_;
    for (int k = lo; k <= hi; ++k)
      if (states_[k](i, j) > best) {
        best = states_[k](i, j);
        arg = k;
      }
    return arg;
  }

  void recompute() {
    for (Eigen::Index i = 1; i < V_.rows(); ++i) {
      for (Eigen::Index j = 1; j < V_.cols(); ++j) {
        if (blocked_(i - 1, j - 1)) {
          for (auto& m : states_) m(i, j) = kNegInf;
          V_(i, j) = 0.0;
          continue;
        }
        const double s = s_(i - 1, j - 1);
        states_[0](i, j) = s + V_(i - 1, j - 1);
        double enter_v = states_[0](i - 1, j), enter_h = states_[0](i, j - 1);
        for (int r = 1; r <= R_; ++r) {
          enter_v = std::max(enter_v, states_[R_ + r](i - 1, j));
          enter_h = std::max(enter_h, states_[r](i, j - 1));
        }
        for (int r = R_; r >= 1; --r) {
          states_[r](i, j) = s - g_ + (r == 1 ? enter_v : states_[r - 1](i - 1, j));
          states_[R_ + r](i, j) = s - g_ + (r == 1 ? enter_h : states_[R_ + r - 1](i, j - 1));
        }
        double v = 0.0;
        for (const auto& m : states_) v = std::max(v, m(i, j));
        V_(i, j) = v;
      }
    }
  }

  const Eigen::MatrixXd& s_;
  double g_;
  int R_;
  std::vector<Eigen::MatrixXd> states_;
  Eigen::MatrixXd V_;
  BinaryMatrix blocked_;
};

template <typename Table>
SWResult extract_segments(Table& table, const Eigen::MatrixXd& s, double min_score) {
  SWResult result;
  result.matches = BinaryMatrix::Constant(s.rows(), s.cols(), false);
  while (true) {
    const auto [score, where] = table.best();
    if (!(score > 0.0) || score < min_score) break;
    SegmentPath path = table.trace(where.first, where.second);
    if (path.cells.empty()) break;
    for (const auto& [r, c] : path.cells)
      if (s(r, c) > 0.0) result.matches(r, c) = true;
    table.block(path);
    result.segments.push_back({std::move(path.cells), path.score});
  }
  return result;
}

}  // namespace

SWResult smith_waterman(const Eigen::Ref<const Eigen::MatrixXd>& S, const SWParams& params) {
  if (!(params.gap >= 0.0)) throw std::invalid_argument("smith_waterman: gap must be non-negative");
  if (params.max_run && *params.max_run < 0) throw std::invalid_argument("smith_waterman: max_run must be >= 0");
  const Eigen::MatrixXd s = (minmax_normalize(S).array() - params.shift).matrix();
  if (params.max_run) {
    RunLimitedTable table(s, params.gap, *params.max_run);
    return extract_segments(table, s, params.min_score);
  }
  PlainTable table(s, params.gap);
  return extract_segments(table, s, params.min_score);
}

BinaryMatrix align_smith_waterman(const Eigen::Ref<const Eigen::MatrixXd>& S, const SWParams& params) {
  return smith_waterman(S, params).matches;
}

BinaryMatrix coarsen_alignment(const BinaryMatrix& fine, std::span<const int> row_map, std::span<const int> col_map,
                               Eigen::Index coarse_rows, Eigen::Index coarse_cols) {
  if (static_cast<Eigen::Index>(row_map.size()) != fine.rows() ||
      static_cast<Eigen::Index>(col_map.size()) != fine.cols())
    throw std::invalid_argument("coarsen_alignment: map sizes do not match the alignment");
  check_map(row_map, coarse_rows, "coarsen_alignment");
  check_map(col_map, coarse_cols, "coarsen_alignment");
  BinaryMatrix coarse = BinaryMatrix::Constant(coarse_rows, coarse_cols, false);
  for (Eigen::Index i = 0; i < fine.rows(); ++i)
    for (Eigen::Index j = 0; j < fine.cols(); ++j)
      if (fine(i, j)) coarse(row_map[i], col_map[j]) = true;
  return coarse;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

F1Score finish(std::size_t tp, std::size_t fp, std::size_t fn) {
  F1Score f{tp, fp, fn, 0.0, 0.0, 0.0};
  if (tp + fp > 0) f.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) f.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (f.precision + f.recall > 0.0) f.f1 = 2.0 * f.precision * f.recall / (f.precision + f.recall);
  return f;
}

}  // namespace

F1Score evaluate_f1(const BinaryMatrix& predicted, const BinaryMatrix& gold) {
  if (predicted.rows() != gold.rows() || predicted.cols() != gold.cols())
    throw std::invalid_argument("evaluate_f1: alignment is " + std::to_string(predicted.rows()) + "x" +
                                std::to_string(predicted.cols()) + " but gold is " + std::to_string(gold.rows()) +
                                "x" + std::to_string(gold.cols()));
  const auto tp = static_cast<std::size_t>((predicted && gold).count());
  const auto fp = static_cast<std::size_t>((predicted && !gold).count());
  const auto fn = static_cast<std::size_t>((!predicted && gold).count());
  return finish(tp, fp, fn);
}

std::vector<F1Score> per_window_f1(const BinaryMatrix& predicted, const BinaryMatrix& gold,
                                   std::span<const int> window_of, WindowSide side) {
  if (predicted.rows() != gold.rows() || predicted.cols() != gold.cols())
    throw std::invalid_argument("per_window_f1: alignment and gold differ in shape");
  const Eigen::Index lines = side == WindowSide::Columns ? predicted.cols() : predicted.rows();
  if (static_cast<Eigen::Index>(window_of.size()) != lines)
    throw std::invalid_argument("per_window_f1: window assignment has the wrong length");
  int windows = 0;
  for (int w : window_of) {
    if (w < 0) throw std::invalid_argument("per_window_f1: unit without a window");
    windows = std::max(windows, w + 1);
  }
  std::vector<std::array<std::size_t, 3>> tally(windows, {0, 0, 0});
  for (Eigen::Index i = 0; i < predicted.rows(); ++i)
    for (Eigen::Index j = 0; j < predicted.cols(); ++j) {
      auto& t = tally[window_of[side == WindowSide::Columns ? j : i]];
      const bool p = predicted(i, j), g = gold(i, j);
      if (p && g) ++t[0];
      else if (p) ++t[1];
      else if (g) ++t[2];
    }
  std::vector<F1Score> out;
  for (const auto& t : tally) out.push_back(finish(t[0], t[1], t[2]));
  return out;
}

// ---------------------------------------------------------------------------
// Tuning

Eigen::MatrixXd TuningPair::similarity(double alpha) const {
  if (structural && textual) return hybrid_combine(*structural, *textual, alpha);
  if (structural) return minmax_normalize(*structural);
  if (textual) return minmax_normalize(*textual);
  throw std::invalid_argument("tuning pair '" + name + "' has no similarity matrix");
}

TuningGrid TuningGrid::defaults() {
  TuningGrid g;
  for (int k = 0; k <= 10; ++k) g.alphas.push_back(k / 10.0);
  for (int k = 1; k <= 10; ++k) g.gaps.push_back(k * 0.05);
  for (int k = 1; k <= 9; ++k) g.shifts.push_back(k / 10.0);
  g.min_scores = {0.5, 1.0, 2.0, 4.0};
  return g;
}

namespace {

BinaryMatrix project(const TuningPair& pair, BinaryMatrix aligned) {
  if (!pair.coarsening) return aligned;
  const auto& c = *pair.coarsening;
  return coarsen_alignment(aligned, c.row_map, c.col_map, c.rows, c.cols);
}

bool uses_alpha(std::span<const TuningPair> pairs) {
  return std::any_of(pairs.begin(), pairs.end(), [](const TuningPair& p) { return p.structural && p.textual; });
}

std::vector<double> quantiles(std::vector<double> pooled, std::size_t count) {
  std::sort(pooled.begin(), pooled.end());
  std::vector<double> out;
  if (pooled.empty() || count == 0) return out;
  for (std::size_t k = 0; k < count; ++k) {
    const double level = count == 1 ? 0.5 : static_cast<double>(k) / static_cast<double>(count - 1);
    const double pos = level * static_cast<double>(pooled.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, pooled.size() - 1);
    out.push_back(pooled[lo] + (pos - static_cast<double>(lo)) * (pooled[hi] - pooled[lo]));
  }
  return out;
}

}  // namespace

BinaryMatrix align_pair(const TuningPair& pair, const AlignParams& params) {
  const Eigen::MatrixXd S = pair.similarity(params.alpha);
  if (params.aligner == Aligner::Threshold) return project(pair, align_threshold(S, params.threshold));
  return project(pair, align_smith_waterman(S, params.sw));
}

TuningResult tune_params(std::span<const TuningPair> development, Aligner aligner, const TuningGrid& given) {
  if (development.empty()) throw std::invalid_argument("tune_params: no development pairs");
  TuningGrid grid = given;
  for (auto* values : {&grid.alphas, &grid.gaps, &grid.shifts, &grid.min_scores}) {
    std::sort(values->begin(), values->end());
    values->erase(std::unique(values->begin(), values->end()), values->end());
  }
  const std::vector<double> alphas = uses_alpha(development) ? grid.alphas : std::vector<double>{1.0};
  if (alphas.empty()) throw std::invalid_argument("tune_params: empty alpha grid");
  const double n = static_cast<double>(development.size());

  TuningResult best;
  best.mean_f1 = -1.0;
  auto offer = [&](const AlignParams& p, double mean) {
    if (mean > best.mean_f1) best = {p, mean};
  };

  for (const double alpha : alphas) {
    std::vector<Eigen::MatrixXd> sims;
    for (const auto& pair : development) sims.push_back(pair.similarity(alpha));

    if (aligner == Aligner::Threshold) {
      std::vector<double> pooled;
      for (const auto& S : sims) pooled.insert(pooled.end(), S.data(), S.data() + S.size());
      for (const double t : quantiles(std::move(pooled), grid.threshold_quantiles)) {
        double total = 0.0;
        for (std::size_t k = 0; k < development.size(); ++k)
          total += evaluate_f1(project(development[k], align_threshold(sims[k], t)), development[k].gold).f1;
        AlignParams p;
        p.aligner = Aligner::Threshold;
        p.alpha = alpha;
        p.threshold = t;
        offer(p, total / n);
      }
      continue;
    }

    if (grid.min_scores.empty()) throw std::invalid_argument("tune_params: empty min_score grid");
    const double lowest = *std::min_element(grid.min_scores.begin(), grid.min_scores.end());
    for (const double gap : grid.gaps) {
      for (const double shift : grid.shifts) {
        // Segment scores never increase, so one extraction down to the lowest
        // min_score serves every min_score through its prefix.
        std::vector<SWResult> runs;
        std::vector<Eigen::MatrixXd> shifted;
        for (const auto& S : sims) {
          runs.push_back(smith_waterman(S, {gap, shift, lowest, std::nullopt}));
          shifted.push_back((minmax_normalize(S).array() - shift).matrix());
        }
        for (const double min_score : grid.min_scores) {
          double total = 0.0;
          for (std::size_t k = 0; k < development.size(); ++k) {
            BinaryMatrix m = BinaryMatrix::Constant(sims[k].rows(), sims[k].cols(), false);
            for (const auto& seg : runs[k].segments) {
              if (seg.score < min_score) break;
              for (const auto& [r, c] : seg.cells)
                if (shifted[k](r, c) > 0.0) m(r, c) = true;
            }
            total += evaluate_f1(project(development[k], std::move(m)), development[k].gold).f1;
          }
          AlignParams p;
          p.aligner = Aligner::SmithWaterman;
          p.alpha = alpha;
          p.sw = {gap, shift, min_score, std::nullopt};
          offer(p, total / n);
        }
      }
    }
  }
  if (best.mean_f1 < 0.0) throw std::invalid_argument("tune_params: empty parameter grid");
  return best;
}

std::vector<HeldOutResult> leave_one_pair_out(std::span<const TuningPair> pairs, Aligner aligner,
                                              const TuningGrid& grid) {
  if (pairs.size() < 2) throw std::invalid_argument("leave_one_pair_out: need at least two pairs");
  std::vector<HeldOutResult> out;
  for (std::size_t target = 0; target < pairs.size(); ++target) {
    std::vector<TuningPair> dev;
    for (std::size_t k = 0; k < pairs.size(); ++k)
      if (k != target) dev.push_back(pairs[k]);
    HeldOutResult r;
    r.target = pairs[target].name;
    r.tuned = tune_params(dev, aligner, grid);
    r.score = evaluate_f1(align_pair(pairs[target], r.tuned.params), pairs[target].gold);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace storynet
