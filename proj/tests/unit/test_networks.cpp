#include <map>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "storynet/networks.hpp"

using namespace storynet;
using testkit::Rng;

namespace {

Corpus single_unit(int count) {
  CorpusRecords r;
  for (const char* n : {"A", "B"}) {
    CharacterRecord c;
    c.canonical_name = n;
    r.characters.push_back(c);
  }
  r.units = {NarrativeUnit{"b", "novels", UnitKind::TopLevel, 0, {}, {}},
             NarrativeUnit{"c", "novels", UnitKind::Chapter, 0, {{UnitKind::TopLevel, "b"}}, {}}};
  r.interactions = {{"c", "A", "B", count}};
  r.periods = {PeriodSpec{"ALL", {{"novels", {0, 0}}}}};
  return build_corpus(r, true);
}

NetworkSlice from_adjacency(const Eigen::MatrixXd& a) {
  std::vector<std::string> names;
  for (int i = 0; i < a.rows(); ++i) names.push_back("v" + std::to_string(i));
  std::map<std::pair<std::string, std::string>, long> t;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = i + 1; j < a.cols(); ++j)
      if (a(i, j) != 0) t[{names[i], names[j]}] = 1;
  return NetworkSlice::from_tallies(t, names);
}

CorpusRecords tv_episode(const std::vector<std::optional<std::string>>& locations) {
  CorpusRecords r;
  for (const char* n : {"x", "y"}) {
    CharacterRecord c;
    c.canonical_name = n;
    r.characters.push_back(c);
  }
  r.units = {NarrativeUnit{"s", "tvshow", UnitKind::TopLevel, 0, {}, {}},
             NarrativeUnit{"e", "tvshow", UnitKind::Episode, 0, {{UnitKind::TopLevel, "s"}}, {}}};
  for (std::size_t i = 0; i < locations.size(); ++i) {
    const std::string id = "sc" + std::to_string(i);
    r.units.push_back(NarrativeUnit{id, "tvshow", UnitKind::Scene, static_cast<int>(i),
                                    {{UnitKind::Episode, "e"}, {UnitKind::TopLevel, "s"}}, locations[i]});
    r.interactions.push_back({id, "x", "y", 1});
  }
  r.periods = {PeriodSpec{"ALL", {{"tvshow", {0, 0}}}}};
  return r;
}

}  // namespace

TEST_CASE("single interaction gives one edge with normalized weight 1") {
  const Corpus c = single_unit(3);
  const NetworkSlice s = build_static(c, "novels", c.period("ALL"));
  REQUIRE(s.size() == 1);
  CHECK(s.edges[0].raw_weight == 3);
  CHECK(s.edges[0].norm_weight == 1.0);
  CHECK(s.raw_weight("B", "A") == 3);
}

TEST_CASE("static edge weights equal an independent tally of interaction rows") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const CorpusRecords rec = testkit::random_records(rng, {8, 2, 5, 40, 3});
    const Corpus c = build_corpus(rec, true);
    const NetworkSlice s = build_static(c, "novels", c.period("ALL"));
    std::map<std::pair<std::string, std::string>, long> tally;
    long max_w = 0;
    for (const auto& i : rec.interactions) {
      auto key = std::minmax(i.char_a, i.char_b);
      max_w = std::max(max_w, tally[{key.first, key.second}] += i.count);
    }
    CHECK(s.size() == tally.size());
    for (const auto& [k, w] : tally) CHECK(s.raw_weight(k.first, k.second) == w);
    for (const auto& e : s.edges) CHECK(e.norm_weight == doctest::Approx(double(e.raw_weight) / max_w));
  }
}

TEST_CASE("character filter restricts vertices and edges") {
  const Corpus c = testkit::tiny_corpus();
  const std::vector<std::string> keep{"Alice", "Bob"};
  const NetworkSlice s = build_static(c, "novels", c.period("U2"), keep);
  CHECK(s.vertices == keep);
  CHECK(s.size() == 1);
  CHECK(s.raw_weight("Alice", "Bob") == 3);
  const NetworkSlice iso = build_static(c, "novels", c.period("U1"), std::vector<std::string>{"Alice", "Bob", "Yara"}, true);
  CHECK(iso.order() == 3);
}

TEST_CASE("dynamic networks: slice counts, cumulative sums and telescoping") {
  const Corpus c = testkit::tiny_corpus();
  const auto& u2 = c.period("U2");
  const auto dyn = build_dynamic(c, "comics", UnitKind::Chapter, u2, std::nullopt, SliceMode::Instant);
  CHECK(dyn.slices.size() == 4);
  CHECK(dyn.unit_ids == std::vector<std::string>{"c:ch0", "c:ch1", "c:ch2", "c:ch3"});
  const auto cum = build_dynamic(c, "comics", UnitKind::Chapter, u2, std::nullopt, SliceMode::Cumulative);
  const auto stat = build_static(c, "comics", u2);
  CHECK(cum.slices.back().vertices == stat.vertices);
  REQUIRE(cum.slices.back().size() == stat.size());
  for (std::size_t k = 0; k < stat.size(); ++k) {
    CHECK(cum.slices.back().edges[k].a == stat.edges[k].a);
    CHECK(cum.slices.back().edges[k].raw_weight == stat.edges[k].raw_weight);
  }
  CHECK_THROWS(build_dynamic(c, "tvshow", UnitKind::Chapter, u2, std::nullopt, SliceMode::Instant));
}

TEST_CASE("cumulative slice t is the sum of instant slices 0..t on random 5-unit fixtures") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Corpus c = build_corpus(testkit::random_records(rng, {6, 1, 5, 12, 3}), true);
    const auto& all = c.period("ALL");
    const auto inst = build_dynamic(c, "novels", UnitKind::Chapter, all, std::nullopt, SliceMode::Instant);
    const auto cum = build_dynamic(c, "novels", UnitKind::Chapter, all, std::nullopt, SliceMode::Cumulative);
    std::vector<std::string> names;
    for (const auto& ch : c.characters()) names.push_back(ch.canonical_name);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(names.size(), names.size());
    for (std::size_t t = 0; t < inst.slices.size(); ++t) {
      sum += adjacency(inst.slices[t], names, WeightKind::Raw);
      CHECK(adjacency(cum.slices[t], names, WeightKind::Raw) == sum);
    }
  }
}

TEST_CASE("block segmentation") {
  SUBCASE("locations A,A,B,A give three blocks") {
    const Corpus c = segment_blocks(build_corpus(tv_episode({"A", "A", "B", "A"}), true), "tvshow");
    const auto blocks = c.units_of("tvshow", UnitKind::Block);
    REQUIRE(blocks.size() == 3);
    CHECK(c.ancestor(*c.find_unit("sc1"), UnitKind::Block) == blocks[0]);
    CHECK(c.ancestor(*c.find_unit("sc2"), UnitKind::Block) == blocks[1]);
    CHECK(c.ancestor(*c.find_unit("sc3"), UnitKind::Block) == blocks[2]);
    CHECK(blocks[0]->location == std::optional<std::string>("A"));
  }
  SUBCASE("one location gives one block") {
    const Corpus c = segment_blocks(build_corpus(tv_episode({"A", "A", "A"}), true), "tvshow");
    CHECK(c.units_of("tvshow", UnitKind::Block).size() == 1);
  }
  SUBCASE("scenes without location become singleton blocks with a warning") {
    std::vector<std::string> warnings;
    const Corpus c = segment_blocks(build_corpus(tv_episode({"A", std::nullopt, "A"}), true), "tvshow", &warnings);
    CHECK(c.units_of("tvshow", UnitKind::Block).size() == 3);
    CHECK(warnings.size() == 1);
  }
  SUBCASE("blocks never span episodes and can be sliced") {
    const Corpus c = segment_blocks(testkit::tiny_corpus(), "tvshow");
    CHECK(c.units_of("tvshow", UnitKind::Block).size() == 6);
    const auto dyn = build_dynamic(c, "tvshow", UnitKind::Block, c.period("U2"), std::nullopt, SliceMode::Instant);
    CHECK(dyn.slices.size() == 6);
    const Corpus again = segment_blocks(c, "tvshow");
    CHECK(again.units_of("tvshow", UnitKind::Block).size() == 6);
  }
}

TEST_CASE("topology statistics") {
  SUBCASE("triangle") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Ones(3, 3);
    a.diagonal().setZero();
    const NetworkSlice s = from_adjacency(a);
    const GraphStats st = compute_stats(s);
    CHECK(st.n == 3);
    CHECK(st.L == 3);
    CHECK(st.density == 1.0);
    CHECK(st.mean_degree == 2.0);
    CHECK(st.mean_path_length == 1.0);
    CHECK(st.clustering == 1.0);
    CHECK(modularity(s, std::vector<int>{0, 0, 0}) == doctest::Approx(0.0));
  }
  SUBCASE("fewer than two vertices") {
    const NetworkSlice s = NetworkSlice::from_tallies({}, {"solo"});
    const GraphStats st = compute_stats(s);
    CHECK(st.n == 1);
    CHECK(st.density == 0.0);
    CHECK(st.mean_path_length == 0.0);
  }
  SUBCASE("8-vertex random graphs against BFS and triad enumeration") {
    Rng rng(3);
    for (int trial = 0; trial < 30; ++trial) {
      const Eigen::MatrixXd a = testkit::random_graph(rng, 8, 0.35);
      const GraphStats st = compute_stats(from_adjacency(a));
      CHECK(st.mean_path_length == doctest::Approx(oracle::mean_path_length_bfs(a)).epsilon(1e-12));
      CHECK(st.clustering == doctest::Approx(oracle::mean_clustering_triads(a)).epsilon(1e-12));
      CHECK(st.L == static_cast<std::size_t>(a.sum() / 2));
      CHECK(st.mean_degree == doctest::Approx(a.sum() / 8));
    }
  }
  SUBCASE("star has perfectly disassortative mixing") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(5, 5);
    for (int i = 1; i < 5; ++i) a(0, i) = a(i, 0) = 1;
    CHECK(compute_stats(from_adjacency(a)).assortativity == doctest::Approx(-1.0));
  }
  SUBCASE("greedy modularity splits two joined cliques") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(8, 8);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        if (i != j) a(i, j) = a(i + 4, j + 4) = 1;
    a(3, 4) = a(4, 3) = 1;
    const NetworkSlice s = from_adjacency(a);
    const auto part = greedy_modularity_partition(s);
    CHECK(part[0] == part[3]);
    CHECK(part[4] == part[7]);
    CHECK(part[0] != part[4]);
    CHECK(compute_stats(s).modularity == doctest::Approx(modularity(s, part)));
    CHECK(modularity(s, part) > 0.3);
  }
}

TEST_CASE("adjacency over a universe zero-pads missing names") {
  const NetworkSlice s = NetworkSlice::from_tallies({{{"a", "b"}, 2}}, {});
  const std::vector<std::string> u{"b", "z", "a"};
  const Eigen::MatrixXd A = adjacency(s, u, WeightKind::Raw);
  CHECK(A(0, 2) == 2.0);
  CHECK(A(2, 0) == 2.0);
  CHECK(A.row(1).sum() == 0.0);
}
