#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "criteria.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "storynet/centrality.hpp"
#include "storynet/graph_match.hpp"
#include "storynet/lap.hpp"
#include "storynet/narrative_align.hpp"
#include "storynet/networks.hpp"
#include "storynet/similarity_match.hpp"

namespace acceptance {

using namespace storynet;
using testkit::Rng;

namespace {

template <typename... Args>
std::string str(const Args&... args) {
  std::ostringstream out;
  (out << ... << args);
  return out.str();
}

Outcome lap_vs_enumeration() {
  Rng rng(20240601);
  std::uniform_int_distribution<int> size(1, 8), sense(0, 1);
  int mismatches = 0, invalid = 0, rectangular = 0;
  std::string first;
  for (int trial = 0; trial < 200; ++trial) {
    const int r = size(rng), c = size(rng);
    rectangular += r != c;
    // Integer-valued costs make the objective comparison exact.
    const Eigen::MatrixXd cost = testkit::random_int_matrix(rng, r, c, -20, 20).cast<double>();
    const bool maximize = sense(rng) == 1;
    const auto a = lap_solve(cost, maximize);
    std::vector<bool> used(c, false);
    int assigned = 0;
    bool ok = static_cast<int>(a.size()) == r;
    for (int j : a) {
      if (j < 0) continue;
      ok = ok && j < c && !used[j];
      if (j < c) used[j] = true;
      ++assigned;
    }
    ok = ok && assigned == std::min(r, c);
    if (!ok) {
      ++invalid;
      continue;
    }
    if (assignment_value(cost, a) != oracle::brute_lap(cost, maximize)) {
      if (!mismatches++) first = str(r, "x", c, maximize ? " max" : " min");
    }
  }
  return verdict(mismatches == 0 && invalid == 0,
                 str("200 matrices up to 8x8 (", rectangular, " rectangular): ", mismatches, " objective mismatches, ",
                     invalid, " invalid assignments", first.empty() ? "" : "; first mismatch " + first));
}

// Weighted 6-vertex graphs, relabelled and perturbed by symmetric
// multiplicative noise in [0.8, 1.2].
Outcome frank_wolfe_vs_qap() {
  Rng rng(12345);
  int hits = 0, over = 0;
  const int instances = 50;
  for (int t = 0; t < instances; ++t) {
    Eigen::MatrixXd w = testkit::random_matrix(rng, 6, 6, 0.1, 1.0);
    w = ((w + w.transpose()) / 2).eval();
    const Eigen::MatrixXd A = testkit::random_graph(rng, 6, 0.5).cwiseProduct(w);
    Eigen::MatrixXd noise = testkit::random_matrix(rng, 6, 6, 0.8, 1.2);
    noise = ((noise + noise.transpose()) / 2).eval();
    const Eigen::MatrixXd noisy = A.cwiseProduct(noise);
    const auto perm = testkit::random_permutation(rng, 6);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(6, 6);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) B(perm[i], perm[j]) = noisy(i, j);

    MatchProblem p;
    p.A = A;
    p.B = B;
    for (int i = 0; i < 6; ++i) {
      p.labels1.push_back("a" + std::to_string(i));
      p.labels2.push_back("b" + std::to_string(i));
    }
    const Matching m = match_relax(p, RelaxObjective::Indefinite);
    const double best = oracle::brute_qap_max(A, B);
    const double got = oracle::qap_value(A, B, m.map);
    if (std::abs(got - best) <= 1e-9 * std::max(1.0, std::abs(best))) ++hits;
    if (got > best + 1e-9 * std::max(1.0, std::abs(best))) ++over;
  }
  return verdict(hits * 10 >= instances * 8 && over == 0,
                 str(hits, "/", instances, " instances at the exhaustive optimum (need >= 80%), ", over,
                     " above it"));
}

Outcome ruzicka_exact() {
  Rng rng(7);
  std::uniform_int_distribution<int> len(1, 12);
  std::uniform_real_distribution<double> value(0.0, 5.0);
  std::bernoulli_distribution zero(0.3), bit(0.5);
  int weighted_bad = 0, binary_bad = 0;
  for (int t = 0; t < 1000; ++t) {
    const int n = len(rng);
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = zero(rng) ? 0.0 : value(rng);
      y[i] = zero(rng) ? 0.0 : value(rng);
    }
    const Eigen::Map<const Eigen::VectorXd> vx(x.data(), n), vy(y.data(), n);
    if (ruzicka(vx, vy) != oracle::ruzicka_direct(x, y)) ++weighted_bad;

    std::vector<double> bx(n), by(n);
    std::vector<int> sx, sy;
    for (int i = 0; i < n; ++i) {
      bx[i] = bit(rng);
      by[i] = bit(rng);
      if (bx[i] > 0) sx.push_back(i);
      if (by[i] > 0) sy.push_back(i);
    }
    const Eigen::Map<const Eigen::VectorXd> ux(bx.data(), n), uy(by.data(), n);
    if (ruzicka(ux, uy) != oracle::set_jaccard(sx, sy)) ++binary_bad;
  }
  return verdict(weighted_bad == 0 && binary_bad == 0,
                 str("1000 weighted pairs: ", weighted_bad, " differ from direct evaluation; 1000 binary pairs: ",
                     binary_bad, " differ from set Jaccard"));
}

Outcome smith_waterman_vs_brute_force() {
  Rng rng(99);
  std::uniform_int_distribution<int> level(0, 2), pick(0, 3), run_pick(0, 3);
  const double gaps[] = {0.0, 0.1, 0.2, 0.35};
  const double shifts[] = {0.25, 0.4, 0.5, 0.7};
  const double mins[] = {0.0, 0.5, 1.0, 1.5};
  int failures = 0, segments = 0, unique_checked = 0;
  std::string first;
  auto note = [&](int trial, const std::string& what) {
    if (!failures++) first = str("matrix ", trial, ": ", what);
  };
  for (int trial = 0; trial < 500; ++trial) {
    Eigen::MatrixXd S(4, 4);
    for (Eigen::Index k = 0; k < S.size(); ++k) S(k) = 0.5 * level(rng);
    SWParams p;
    p.gap = gaps[pick(rng)];
    p.shift = shifts[pick(rng)];
    p.min_score = mins[pick(rng)];
    const int r = run_pick(rng);
    if (r > 0 && trial % 2 == 1) p.max_run = r;

    const SWResult out = smith_waterman(S, p);
    const Eigen::MatrixXd s = (minmax_normalize(S).array() - p.shift).matrix();
    BinaryMatrix blocked = BinaryMatrix::Constant(4, 4, false);
    BinaryMatrix expected = BinaryMatrix::Constant(4, 4, false);
    bool ok = true;
    for (const auto& seg : out.segments) {
      ++segments;
      const auto best = oracle::brute_best_paths(s, p.gap, blocked, p.max_run);
      if (std::abs(seg.score - best.score) > 1e-9) {
        note(trial, str("segment score ", seg.score, " but optimum ", best.score));
        ok = false;
        break;
      }
      if (!(best.score > 0.0) || best.score < p.min_score) {
        note(trial, "segment extracted below the stopping score");
        ok = false;
        break;
      }
      if (!oracle::valid_path(seg.cells, s, blocked, p.max_run) ||
          std::abs(oracle::path_score(s, seg.cells, p.gap) - seg.score) > 1e-9) {
        note(trial, "segment path is not a valid path with its reported score");
        ok = false;
        break;
      }
      if (best.paths.size() == 1) {
        ++unique_checked;
        if (best.paths.front() != seg.cells) {
          note(trial, "unique optimal path differs from the extracted segment");
          ok = false;
          break;
        }
      }
      for (const auto& [i, j] : seg.cells) {
        blocked(i, j) = true;
        if (s(i, j) > 0.0) expected(i, j) = true;
      }
    }
    if (!ok) continue;
    const auto rest = oracle::brute_best_paths(s, p.gap, blocked, p.max_run);
    if (rest.score > 0.0 && rest.score >= p.min_score) {
      note(trial, str("extraction stopped while a path of score ", rest.score, " remained"));
      continue;
    }
    if (!(expected == out.matches).all()) note(trial, "match matrix differs from the visited positive cells");
  }
  return verdict(failures == 0, str("500 sampled 4x4 matrices over {0, 0.5, 1}, ", segments, " segments (",
                                    unique_checked, " with a unique optimum): ", failures, " failures",
                                    first.empty() ? "" : "; first " + first));
}

Outcome definitional_metrics() {
  Rng rng(1234);
  std::bernoulli_distribution coin(0.35);
  std::uniform_int_distribution<int> dim(1, 7), groups(1, 4), rows(3, 12), cols(2, 5), coarse(0, 1);
  int f1_bad = 0, ari_bad = 0, rho_bad = 0;
  for (int t = 0; t < 100; ++t) {
    const int r = dim(rng), c = dim(rng);
    BinaryMatrix pred(r, c), gold(r, c);
    for (Eigen::Index k = 0; k < pred.size(); ++k) pred(k) = coin(rng), gold(k) = coin(rng);
    const F1Score f = evaluate_f1(pred, gold);
    const auto o = oracle::f1_by_counting(pred, gold);
    if (std::abs(f.f1 - o.f1) > 1e-9 || std::abs(f.precision - o.precision) > 1e-9 ||
        std::abs(f.recall - o.recall) > 1e-9)
      ++f1_bad;
  }
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + dim(rng);
    const auto a = testkit::random_labels(rng, n, groups(rng)), b = testkit::random_labels(rng, n, groups(rng));
    if (std::abs(ari(a, b) - oracle::pair_counting_ari(a, b)) > 1e-9) ++ari_bad;
  }
  for (int t = 0; t < 100; ++t) {
    Eigen::MatrixXd d = testkit::random_matrix(rng, rows(rng), cols(rng));
    if (coarse(rng)) d = (d * 3).array().round().matrix();  // ties and possibly constant columns
    const Eigen::MatrixXd m = spearman_matrix(d);
    for (Eigen::Index a = 0; a < d.cols(); ++a)
      for (Eigen::Index b = 0; b < d.cols(); ++b) {
        if (a == b) continue;
        if (std::abs(m(a, b) - oracle::spearman(d.col(a), d.col(b))) > 1e-9) {
          ++rho_bad;
          a = d.cols();
          break;
        }
      }
  }
  return verdict(f1_bad + ari_bad + rho_bad == 0,
                 str("100 instances each, tolerance 1e-9: F1 ", f1_bad, ", ARI ", ari_bad, ", Spearman ", rho_bad,
                     " mismatches"));
}

Outcome cumulative_equals_sum_of_instants() {
  Rng rng(55);
  std::uniform_int_distribution<int> units(2, 6), inter(5, 40);
  int bad = 0, slices = 0;
  for (int t = 0; t < 50; ++t) {
    testkit::RandomCorpusSpec spec;
    spec.characters = 7;
    spec.top_levels = 2;
    spec.units_per_top = units(rng);
    spec.interactions = inter(rng);
    const Corpus c = build_corpus(testkit::random_records(rng, spec), true);
    const auto& all = c.period("ALL");
    const auto inst = build_dynamic(c, "novels", UnitKind::Chapter, all, std::nullopt, SliceMode::Instant);
    const auto cum = build_dynamic(c, "novels", UnitKind::Chapter, all, std::nullopt, SliceMode::Cumulative);
    std::vector<std::string> names;
    for (const auto& ch : c.characters()) names.push_back(ch.canonical_name);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(names.size(), names.size());
    bool ok = inst.slices.size() == cum.slices.size();
    for (std::size_t k = 0; ok && k < inst.slices.size(); ++k) {
      ++slices;
      sum += adjacency(inst.slices[k], names, WeightKind::Raw);
      ok = adjacency(cum.slices[k], names, WeightKind::Raw) == sum;
    }
    bad += !ok;
  }
  return verdict(bad == 0, str("50 random corpora, ", slices, " slices: ", bad, " fixtures violate the identity"));
}

Outcome block_segmentation_partition() {
  Rng rng(808);
  std::uniform_int_distribution<int> seasons(1, 3), eps(1, 4), scenes(1, 9);
  int bad = 0;
  std::string first;
  for (int t = 0; t < 200; ++t) {
    const Corpus base = build_corpus(testkit::random_tv_records(rng, seasons(rng), eps(rng), scenes(rng)), true);
    const Corpus c = segment_blocks(base, "tvshow");
    std::map<const NarrativeUnit*, std::vector<const NarrativeUnit*>> members;
    std::string problem;
    const auto scene_list = c.units_of("tvshow", UnitKind::Scene);
    for (const NarrativeUnit* s : scene_list) {
      const NarrativeUnit* b = c.ancestor(*s, UnitKind::Block);
      if (!b) {
        problem = "scene without block";
        break;
      }
      if (c.ancestor(*b, UnitKind::Episode) != c.ancestor(*s, UnitKind::Episode)) {
        problem = "block spans episodes";
        break;
      }
      members[b].push_back(s);
    }
    if (problem.empty() && members.size() != c.units_of("tvshow", UnitKind::Block).size())
      problem = "empty block";
    // Runs: consecutive scenes of one block, one shared non-missing location
    // (or a single scene), and maximal within the episode.
    for (std::size_t k = 0; problem.empty() && k < scene_list.size(); ++k) {
      const NarrativeUnit* s = scene_list[k];
      const NarrativeUnit* b = c.ancestor(*s, UnitKind::Block);
      const auto& m = members[b];
      if (m.size() > 1 && (!s->location || s->location != m.front()->location)) problem = "mixed locations";
      if (k + 1 < scene_list.size()) {
        const NarrativeUnit* n = scene_list[k + 1];
        const bool same_episode = c.ancestor(*n, UnitKind::Episode) == c.ancestor(*s, UnitKind::Episode);
        const bool same_block = c.ancestor(*n, UnitKind::Block) == b;
        const bool joinable = same_episode && s->location && s->location == n->location;
        if (same_block != joinable) problem = "run is not maximal or joins unrelated scenes";
      }
    }
    if (!problem.empty() && !bad++) first = str("fixture ", t, ": ", problem);
  }
  return verdict(bad == 0, str("200 randomized TV fixtures: ", bad, " violations", first.empty() ? "" : "; " + first));
}

Outcome threshold_monotone() {
  Rng rng(31337);
  std::uniform_int_distribution<int> dim(1, 9);
  std::uniform_real_distribution<double> th(-0.2, 1.2);
  int bad = 0;
  for (int t = 0; t < 300; ++t) {
    Eigen::MatrixXd S = testkit::random_matrix(rng, dim(rng), dim(rng));
    if (t % 3 == 0) S = (S * 4).array().round().matrix() / 4;  // thresholds landing on entries
    double t1 = th(rng), t2 = th(rng);
    if (t % 3 == 0) t1 = S(0, 0);
    if (t1 > t2) std::swap(t1, t2);
    const BinaryMatrix lo = align_threshold(S, t1), hi = align_threshold(S, t2);
    if ((hi && !lo).any()) ++bad;
  }
  return verdict(bad == 0, str("300 random matrices and threshold pairs: ", bad, " non-nested alignments"));
}

}  // namespace

std::vector<Criterion> desk_criteria() {
  return {
      {"lap_exhaustive", "desk", lap_vs_enumeration},
      {"frank_wolfe_qap_optimum", "desk", frank_wolfe_vs_qap},
      {"ruzicka_direct", "desk", ruzicka_exact},
      {"smith_waterman_brute_force", "desk", smith_waterman_vs_brute_force},
      {"f1_ari_spearman_definitional", "desk", definitional_metrics},
      {"cumulative_sum_of_instants", "desk", cumulative_equals_sum_of_instants},
      {"block_segmentation", "desk", block_segmentation_partition},
      {"threshold_monotonicity", "desk", threshold_monotone},
  };
}

}  // namespace acceptance
