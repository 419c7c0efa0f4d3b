#include "fixtures.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "storynet/csv.hpp"

namespace storynet::testkit {

namespace {

struct BeatPair {
  const char* a;
  const char* b;
  int count;
  const char* only = nullptr;  // medium restriction
};

struct Beat {
  std::vector<BeatPair> pairs;
  const char* location;
  const char* text;
};

const std::vector<Beat>& beats() {
  static const std::vector<Beat> plot{
      {{{"Alice", "Bob", 2}, {"Bob", "Guard", 1}, {"Bob", "Hodor", 1, "novels"}},
       "Winterfell",
       "alice and bob ride north from winterfell while the guard watches the wolfswood gate"},
      {{{"Carol", "Dave", 2}, {"Carol", "Eve", 1}},
       "King's Landing",
       "carol and dave plot in the red keep at kings landing and eve brings poisoned wine"},
      {{{"Alice", "Frank", 2}, {"Frank", "Guard", 1}},
       "Wall",
       "alice climbs the icy wall where frank commands the night watch against wildlings"},
      {{{"Bob", "Carol", 1}, {"Alice", "Carol", 2}},
       "King's Landing",
       "bob and alice face carol at court in the throne room over a stolen letter"},
      {{{"Dave", "Eve", 2}, {"Eve", "Frank", 1}, {"Eve", "Yara", 1, "tvshow"}},
       "Wall",
       "dave and eve flee beyond the wall and frank lets them pass through the tunnel"},
      {{{"Alice", "Bob", 1}, {"Alice", "Dave", 2}, {"Bob", "Dave", 1}},
       "Winterfell",
       "alice bob and dave return to winterfell for the final feast and a wedding"},
  };
  return plot;
}

// Beat -> comics chapter / tv episode.
constexpr int kComicsChapter[6] = {0, 0, 1, 2, 3, 3};
constexpr int kEpisode[6] = {0, 0, 1, 2, 3, 3};

NarrativeUnit unit(std::string id, std::string medium, UnitKind kind, int ordinal,
                   std::map<UnitKind, std::string> parents = {}, std::optional<std::string> location = {}) {
  NarrativeUnit u;
  u.id = std::move(id);
  u.medium = std::move(medium);
  u.kind = kind;
  u.ordinal = ordinal;
  u.parent_ids = std::move(parents);
  u.location = std::move(location);
  return u;
}

CharacterRecord character(std::string name, Sex sex, std::string affiliation, bool named = true) {
  CharacterRecord c;
  c.canonical_name = std::move(name);
  c.sex = sex;
  c.affiliation = std::move(affiliation);
  c.named = named;
  return c;
}

std::string gold_csv(const char* row_kind, const char* col_kind, const std::vector<std::pair<std::string, std::string>>& pairs) {
  std::ostringstream out;
  out << "# row_kind=" << row_kind << ",col_kind=" << col_kind << "\n";
  csv::write_row(out, {"row_unit_id", "col_unit_id"});
  for (const auto& [r, c] : pairs) csv::write_row(out, {r, c});
  return out.str();
}

}  // namespace

CorpusRecords tiny_records() {
  CorpusRecords r;
  r.characters = {character("Alice", Sex::Female, "Stark"),    character("Bob", Sex::Male, "Stark"),
                  character("Carol", Sex::Female, "Lannister"), character("Dave", Sex::Male, "Lannister"),
                  character("Eve", Sex::Female, ""),            character("Frank", Sex::Male, "Night's Watch"),
                  character("Guard", Sex::Unknown, "", false),   character("Hodor", Sex::Male, "Stark"),
                  character("Yara", Sex::Female, "Greyjoy")};
  r.aliases = {{"Ally", "Alice"}, {"Robert", "Bob"}};

  using K = UnitKind;
  for (int b = 0; b < 2; ++b) {
    r.units.push_back(unit("n:b" + std::to_string(b + 1), "novels", K::TopLevel, b));
    r.units.push_back(unit("c:v" + std::to_string(b + 1), "comics", K::TopLevel, b));
    r.units.push_back(unit("t:s" + std::to_string(b + 1), "tvshow", K::TopLevel, b));
  }
  for (int ch = 0; ch < 4; ++ch)
    r.units.push_back(unit("c:ch" + std::to_string(ch), "comics", K::Chapter, ch,
                           {{K::TopLevel, ch < 2 ? "c:v1" : "c:v2"}}));
  for (int e = 0; e < 4; ++e)
    r.units.push_back(unit("t:e" + std::to_string(e), "tvshow", K::Episode, e,
                           {{K::TopLevel, e < 2 ? "t:s1" : "t:s2"}}));

  const auto& plot = beats();
  for (int k = 0; k < 6; ++k) {
    const std::string book = k < 3 ? "n:b1" : "n:b2";
    const std::string nch = "n:c" + std::to_string(k);
    r.units.push_back(unit(nch, "novels", K::Chapter, k, {{K::TopLevel, book}}));

    const std::string cch = "c:ch" + std::to_string(kComicsChapter[k]);
    const std::string cs = "c:s" + std::to_string(k);
    r.units.push_back(unit(cs, "comics", K::Scene, k, {{K::Chapter, cch}, {K::TopLevel, k < 3 ? "c:v1" : "c:v2"}}));

    const std::string ep = "t:e" + std::to_string(kEpisode[k]);
    const std::string season = k < 3 ? "t:s1" : "t:s2";
    const std::string ts0 = "t:sc" + std::to_string(2 * k), ts1 = "t:sc" + std::to_string(2 * k + 1);
    r.units.push_back(unit(ts0, "tvshow", K::Scene, 2 * k, {{K::Episode, ep}, {K::TopLevel, season}}, plot[k].location));
    r.units.push_back(unit(ts1, "tvshow", K::Scene, 2 * k + 1, {{K::Episode, ep}, {K::TopLevel, season}}, plot[k].location));

    std::size_t shared = 0;
    for (const auto& p : plot[k].pairs) {
      const std::string only = p.only ? p.only : "";
      std::string a = p.a;
      if (k == 2 && a == "Alice") a = "Ally";
      if (only.empty() || only == "novels") r.interactions.push_back({nch, a, p.b, p.count});
      if (only.empty() || only == "comics") r.interactions.push_back({cs, p.a, p.b, 1});
      if (only.empty() || only == "tvshow") {
        const bool first = only.empty() ? (shared++ % 2 == 0) : false;
        r.interactions.push_back({first ? ts0 : ts1, p.a, k == 0 && std::string(p.b) == "Bob" ? "Robert" : p.b, p.count});
      }
    }
  }

  PeriodSpec u1{"U1", {}}, u2{"U2", {}};
  for (const char* m : {"novels", "comics", "tvshow"}) {
    u1.ranges[m] = {0, 0};
    u2.ranges[m] = {0, 1};
  }
  r.periods = {u1, u2};
  return r;
}

Corpus tiny_corpus() { return build_corpus(tiny_records(), true); }

std::string tiny_gold_novels_comics() {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (int k = 0; k < 6; ++k) pairs.emplace_back("n:c" + std::to_string(k), "c:ch" + std::to_string(kComicsChapter[k]));
  return gold_csv("chapter", "chapter", pairs);
}

std::string tiny_gold_comics_tvshow() {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (int c = 0; c < 4; ++c) pairs.emplace_back("c:ch" + std::to_string(c), "t:e" + std::to_string(c));
  return gold_csv("chapter", "episode", pairs);
}

std::string tiny_gold_novels_tvshow() {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (int k = 0; k < 6; ++k) pairs.emplace_back("n:c" + std::to_string(k), "t:e" + std::to_string(kEpisode[k]));
  return gold_csv("chapter", "episode", pairs);
}

std::string tiny_summaries(std::string_view medium) {
  const auto& plot = beats();
  std::ostringstream out;
  csv::write_row(out, {"unit_id", "text"});
  if (medium == "novels") {
    for (int k = 0; k < 6; ++k) csv::write_row(out, {"n:c" + std::to_string(k), plot[k].text});
    return out.str();
  }
  const bool comics = medium == "comics";
  if (!comics && medium != "tvshow") throw std::invalid_argument("no summaries for this medium");
  for (int u = 0; u < 4; ++u) {
    std::string text;
    for (int k = 0; k < 6; ++k)
      if ((comics ? kComicsChapter[k] : kEpisode[k]) == u) text += std::string(text.empty() ? "" : " ") + plot[k].text;
    csv::write_row(out, {(comics ? "c:ch" : "t:e") + std::to_string(u), text});
  }
  return out.str();
}

CorpusRecords random_records(Rng& rng, const RandomCorpusSpec& spec) {
  CorpusRecords r;
  std::uniform_int_distribution<int> coin(0, 9), sex(0, 2), aff(0, 2);
  const char* affs[] = {"a", "b", ""};
  const Sex sexes[] = {Sex::Male, Sex::Female, Sex::Unknown};
  for (int i = 0; i < spec.characters; ++i)
    r.characters.push_back(character("c" + std::to_string(i), sexes[sex(rng)], affs[aff(rng)], coin(rng) != 0));
  int ordinal = 0;
  std::vector<std::string> units;
  for (int t = 0; t < spec.top_levels; ++t) {
    const std::string book = "b" + std::to_string(t);
    r.units.push_back(unit(book, "novels", UnitKind::TopLevel, t));
    for (int k = 0; k < spec.units_per_top; ++k) {
      units.push_back("u" + std::to_string(ordinal));
      r.units.push_back(unit(units.back(), "novels", UnitKind::Chapter, ordinal++, {{UnitKind::TopLevel, book}}));
    }
  }
  std::uniform_int_distribution<int> pick_unit(0, static_cast<int>(units.size()) - 1),
      pick_char(0, spec.characters - 1), pick_count(1, spec.max_count);
  for (int i = 0; i < spec.interactions; ++i) {
    const int a = pick_char(rng);
    int b = pick_char(rng);
    while (b == a) b = pick_char(rng);
    r.interactions.push_back({units[pick_unit(rng)], "c" + std::to_string(a), "c" + std::to_string(b), pick_count(rng)});
  }
  r.periods = {PeriodSpec{"ALL", {{"novels", {0, spec.top_levels - 1}}}}};
  return r;
}

CorpusRecords random_tv_records(Rng& rng, int seasons, int episodes_per_season, int max_scenes) {
  CorpusRecords r;
  r.characters = {character("x", Sex::Male, ""), character("y", Sex::Female, "")};
  std::uniform_int_distribution<int> scenes(1, max_scenes), loc(0, 2), missing(0, 9);
  const char* locations[] = {"A", "B", "C"};
  int episode = 0, scene = 0;
  for (int s = 0; s < seasons; ++s) {
    const std::string season = "s" + std::to_string(s);
    r.units.push_back(unit(season, "tvshow", UnitKind::TopLevel, s));
    for (int e = 0; e < episodes_per_season; ++e, ++episode) {
      const std::string ep = "e" + std::to_string(episode);
      r.units.push_back(unit(ep, "tvshow", UnitKind::Episode, episode, {{UnitKind::TopLevel, season}}));
      const int n = scenes(rng);
      for (int k = 0; k < n; ++k, ++scene) {
        std::optional<std::string> where;
        if (missing(rng) != 0) where = locations[loc(rng)];
        const std::string id = "sc" + std::to_string(scene);
        r.units.push_back(unit(id, "tvshow", UnitKind::Scene, scene, {{UnitKind::Episode, ep}, {UnitKind::TopLevel, season}}, where));
        r.interactions.push_back({id, "x", "y", 1});
      }
    }
  }
  r.periods = {PeriodSpec{"ALL", {{"tvshow", {0, seasons - 1}}}}};
  return r;
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_corpus(const CorpusRecords& records, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ostringstream chars, aliases, units, inter, periods;
  csv::write_row(chars, {"canonical_name", "sex", "affiliation", "named"});
  for (const auto& c : records.characters)
    csv::write_row(chars, {c.canonical_name, std::string(to_string(c.sex)), c.affiliation, c.named ? "true" : "false"});
  csv::write_row(aliases, {"alias", "canonical_name"});
  for (const auto& [a, c] : records.aliases) csv::write_row(aliases, {a, c});
  csv::write_row(units, {"id", "medium", "kind", "ordinal", "parent_ids", "location"});
  for (const auto& u : records.units) {
    std::string parents;
    for (const auto& [kind, id] : u.parent_ids)
      parents += (parents.empty() ? "" : ";") + std::string(to_string(kind)) + "=" + id;
    csv::write_row(units, {u.id, u.medium, std::string(to_string(u.kind)), std::to_string(u.ordinal), parents,
                           u.location.value_or("")});
  }
  csv::write_row(inter, {"unit_id", "char_a", "char_b", "count"});
  for (const auto& i : records.interactions)
    csv::write_row(inter, {i.unit_id, i.char_a, i.char_b, std::to_string(i.count)});
  csv::write_row(periods, {"label", "medium", "first_ordinal", "last_ordinal"});
  for (const auto& p : records.periods)
    for (const auto& [m, range] : p.ranges)
      csv::write_row(periods, {p.label, m, std::to_string(range.first), std::to_string(range.last)});
  const auto paths = CorpusPaths::in_directory(dir);
  write_text(paths.characters, chars.str());
  write_text(paths.aliases, aliases.str());
  write_text(paths.units, units.str());
  write_text(paths.interactions, inter.str());
  write_text(paths.periods, periods.str());
}

std::filesystem::path temp_dir(std::string_view tag) {
  static std::atomic<int> counter{0};
  std::random_device rd;
  const auto dir = std::filesystem::temp_directory_path() /
                   ("storynet-" + std::string(tag) + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = d(rng);
  return m;
}

Eigen::MatrixXi random_int_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, int lo, int hi) {
  std::uniform_int_distribution<int> d(lo, hi);
  Eigen::MatrixXi m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = d(rng);
  return m;
}

Eigen::MatrixXd random_graph(Rng& rng, int n, double p) {
  std::bernoulli_distribution edge(p);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (edge(rng)) a(i, j) = a(j, i) = 1.0;
  return a;
}

NetworkSlice random_slice(Rng& rng, int n, double p, int max_weight) {
  std::bernoulli_distribution edge(p);
  std::uniform_int_distribution<int> w(1, max_weight);
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back("v" + std::to_string(i));
  std::map<std::pair<std::string, std::string>, long> tallies;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (edge(rng)) tallies[{names[i], names[j]}] = w(rng);
  return NetworkSlice::from_tallies(tallies, names);
}

std::vector<int> random_labels(Rng& rng, int n, int k) {
  std::uniform_int_distribution<int> d(0, k - 1);
  std::vector<int> out(n);
  for (int& v : out) v = d(rng);
  return out;
}

std::vector<int> random_permutation(Rng& rng, int n) {
  std::vector<int> p(n);
  for (int i = 0; i < n; ++i) p[i] = i;
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

}  // namespace storynet::testkit
