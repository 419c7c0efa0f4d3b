#include "doctest.h"
#include "fixtures.hpp"
#include "storynet/export.hpp"

using namespace storynet;

TEST_CASE("matrix and alignment CSV") {
  const std::vector<std::string> rows{"r1", "r,2"}, cols{"a", "b"};
  Eigen::MatrixXd v(2, 2);
  v << 0.5, 1, 0.25, 0;
  CHECK(io::matrix_csv(rows, cols, v, "unit") == "unit,a,b\nr1,0.5,1\n\"r,2\",0.25,0\n");
  BinaryMatrix cells = BinaryMatrix::Constant(2, 2, false);
  cells(1, 0) = true;
  CHECK(io::alignment_csv(rows, cols, cells) == "row_unit_id,col_unit_id\n\"r,2\",a\n");
}

TEST_CASE("PGM images") {
  Eigen::MatrixXd v(1, 3);
  v << 2, 4, 6;
  CHECK(io::pgm_heatmap(v) == "P2\n3 1\n255\n0 128 255\n");
  BinaryMatrix p(1, 2), g(1, 2);
  p << true, false;
  g << true, true;
  CHECK(io::pgm_binary(p) == "P2\n2 1\n1\n1 0\n");
  CHECK(io::pgm_confusion(p, g) == "P2\n2 1\n3\n3 1\n");
}

TEST_CASE("atomic writes replace the target and leave no temporary") {
  const auto dir = testkit::temp_dir("export");
  const auto target = dir / "sub" / "out.txt";
  io::write_atomic(target, "first");
  io::write_atomic(target, "second");
  CHECK(testkit::read_text(target) == "second");
  int files = 0;
  for (const auto& e : std::filesystem::directory_iterator(target.parent_path())) files += e.is_regular_file();
  CHECK(files == 1);
}

TEST_CASE("correspondence, summaries and embeddings") {
  const auto dir = testkit::temp_dir("export-read");
  testkit::write_text(dir / "names.csv", "name_side1,name_side2\nAlice,Alicia\nBob,Robert\n");
  const auto c = io::read_correspondence(dir / "names.csv");
  CHECK(c.size() == 2);
  CHECK(c.at("Alice") == "Alicia");
  testkit::write_text(dir / "dup.csv", "char_side1,char_side2\nA,B\nA,C\n");
  CHECK_THROWS(io::read_correspondence(dir / "dup.csv"));

  testkit::write_text(dir / "s.csv", "unit_id,text\nu1,\"hello, world\"\n");
  CHECK(io::read_summaries(dir / "s.csv").at("u1") == "hello, world");

  testkit::write_text(dir / "e.csv", "unit_id,d0,d1\nu1,0.5,-1\n");
  const auto e = io::read_embeddings(dir / "e.csv");
  CHECK(e.at("u1") == Eigen::Vector2d(0.5, -1));
  testkit::write_text(dir / "bad.csv", "unit_id,d0\nu1,abc\n");
  CHECK_THROWS(io::read_embeddings(dir / "bad.csv"));
}

TEST_CASE("matching and network CSV") {
  Matching m;
  m.labels1 = {"a", "b"};
  m.labels2 = {"x", "y"};
  m.map = {1, -1};
  m.confidence = {0.75, 0};
  m.seed = {true, false};
  CHECK(io::matching_csv(m) == "char_side1,char_side2,confidence,is_seed\na,y,0.75,1\n");

  const NetworkSlice s = NetworkSlice::from_tallies({{{"a", "b"}, 2}, {{"b", "c"}, 4}}, {});
  CHECK(io::edge_list_csv(s) == "char_a,char_b,raw_weight,norm_weight\na,b,2,0.5\nb,c,4,1\n");
  const auto j = io::slice_summary(s, "novels", "ALL");
  CHECK(j["stats"]["L"] == 2);
  CHECK(j["medium"] == "novels");
}
