#include "cli.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "storynet/centrality.hpp"
#include "storynet/corpus.hpp"
#include "storynet/csv.hpp"
#include "storynet/export.hpp"
#include "storynet/graph_match.hpp"
#include "storynet/narrative_align.hpp"
#include "storynet/networks.hpp"
#include "storynet/similarity_match.hpp"

namespace storynet::cli {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Type { Str, Int, Num, Flag, List };

struct OptSpec {
  std::string key;
  Type type;
  json fallback;
  std::string help;
};

struct Context {
  fs::path out_dir;
  bool viz = false;
  std::ostream& out;
  std::ostream& err;

  void emit(const std::string& name, const std::string& content) const {
    if (!out_dir.empty()) io::write_atomic(out_dir / name, content);
  }
  void emit_viz(const std::string& name, const std::string& content) const {
    if (viz) emit(name, content);
  }
};

struct Command {
  std::string name;
  std::string description;
  std::vector<OptSpec> options;
  std::function<int(const json&, const Context&)> handler;
};

// ---------------------------------------------------------------------------
// Config access

const std::string& str(const json& cfg, const char* key) { return cfg.at(key).get_ref<const std::string&>(); }
long long integer(const json& cfg, const char* key) { return cfg.at(key).get<long long>(); }
double number(const json& cfg, const char* key) { return cfg.at(key).get<double>(); }
bool flag(const json& cfg, const char* key) { return cfg.at(key).get<bool>(); }
std::vector<std::string> list(const json& cfg, const char* key) { return cfg.at(key).get<std::vector<std::string>>(); }
bool has(const json& cfg, const char* key) { return !cfg.at(key).is_null(); }

const std::string& required(const json& cfg, const char* key) {
  const std::string& v = str(cfg, key);
  if (v.empty()) throw UsageError(std::string("--") + key + " is required");
  return v;
}

double parse_number(const std::string& text, const std::string& what) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (text.empty() || res.ec != std::errc() || res.ptr != end)
    throw UsageError(what + ": expected a number, got '" + text + "'");
  return v;
}

json convert(const OptSpec& spec, const std::string& text) {
  switch (spec.type) {
    case Type::Int: {
      long long v = 0;
      const char* end = text.data() + text.size();
      const auto res = std::from_chars(text.data(), end, v);
      if (text.empty() || res.ec != std::errc() || res.ptr != end)
        throw UsageError("--" + spec.key + ": expected an integer, got '" + text + "'");
      return v;
    }
    case Type::Num:
      return parse_number(text, "--" + spec.key);
    default:
      return text;
  }
}

bool type_matches(const OptSpec& spec, const json& v) {
  if (v.is_null()) return spec.fallback.is_null();
  switch (spec.type) {
    case Type::Str: return v.is_string();
    case Type::Int: return v.is_number_integer();
    case Type::Num: return v.is_number();
    case Type::Flag: return v.is_boolean();
    case Type::List:
      return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_string(); });
  }
  return false;
}

std::string cli_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

std::string pct(double fraction) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << percent(fraction);
  return s.str();
}

std::string fixed3(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(3) << v;
  return s.str();
}

template <typename Enum>
Enum parse_choice(const json& cfg, const char* key, const std::map<std::string, Enum>& choices) {
  const std::string& v = str(cfg, key);
  const auto it = choices.find(v);
  if (it == choices.end()) {
    std::string allowed;
    for (const auto& [name, e] : choices) allowed += (allowed.empty() ? "" : "|") + name;
    throw UsageError(std::string("--") + key + ": '" + v + "' is not one of " + allowed);
  }
  return it->second;
}

UnitKind parse_kind(const std::string& text) {
  const auto k = parse_unit_kind(text);
  if (!k) throw UsageError("unknown unit kind '" + text + "'");
  return *k;
}

std::map<std::string, std::string> keyed(const json& cfg, const char* key) {
  std::map<std::string, std::string> out;
  for (const auto& item : list(cfg, key)) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      throw UsageError(std::string("--") + key + ": expected medium=value, got '" + item + "'");
    out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

std::vector<double> numbers(const json& cfg, const char* key) {
  std::vector<double> out;
  for (const auto& item : list(cfg, key)) out.push_back(parse_number(item, std::string("--") + key));
  return out;
}

// ---------------------------------------------------------------------------
// Shared steps

Corpus open_corpus(const json& cfg) {
  return load_corpus(CorpusPaths::in_directory(required(cfg, "corpus")), !flag(cfg, "lenient"));
}

/// Segments TV blocks for every medium whose requested kind is Block.
Corpus with_blocks(Corpus corpus, const std::map<std::string, UnitKind>& kinds, const Context& ctx) {
  for (const auto& [medium, kind] : kinds) {
    if (kind != UnitKind::Block) continue;
    std::vector<std::string> warnings;
    corpus = segment_blocks(corpus, medium, &warnings);
    for (const auto& w : warnings) ctx.err << "warning: " << w << '\n';
  }
  return corpus;
}

std::map<std::string, UnitKind> kind_map(const json& cfg) {
  std::map<std::string, UnitKind> out;
  for (const auto& [medium, kind] : keyed(cfg, "kinds")) out[medium] = parse_kind(kind);
  return out;
}

UnitKind kind_for(const Corpus& corpus, const std::map<std::string, UnitKind>& kinds, const std::string& medium) {
  if (const auto it = kinds.find(medium); it != kinds.end()) return it->second;
  const auto finest = corpus.finest_kind(medium);
  if (!finest) throw std::invalid_argument("medium '" + medium + "' has no units");
  return *finest;
}

std::vector<std::string> units_in_period(const Corpus& corpus, const std::string& medium, UnitKind kind,
                                         const PeriodSpec& period) {
  std::vector<std::string> ids;
  for (const NarrativeUnit* u : corpus.units_of(medium, kind))
    if (corpus.in_period(*u, period)) ids.push_back(u->id);
  return ids;
}

std::vector<std::string> choose_characters(const Corpus& corpus, const json& cfg, std::span<const std::string> media,
                                           const PeriodSpec& period) {
  const auto set = parse_character_set(str(cfg, "charset"));
  if (!set) throw UsageError("--charset: '" + str(cfg, "charset") + "' is not one of all|named|common|topk");
  const auto extra = list(cfg, "extra");
  const long long k = integer(cfg, "k");
  if (k < 0) throw UsageError("--k must be non-negative");
  if (*set == CharacterSet::TopK) {
    const ImportanceTable table = compute_importance(corpus, media, period);
    return select_characters(corpus, *set, media, period, &table, static_cast<std::size_t>(k), extra);
  }
  return select_characters(corpus, *set, media, period, nullptr, static_cast<std::size_t>(k), extra);
}

std::string stats_header() {
  return "medium,period,slice,unit_id,n,L,density,mean_degree,mean_path_length,clustering,assortativity,modularity\n";
}

std::string stats_row(const std::string& medium, const std::string& period, const std::string& slice,
                      const std::string& unit, const GraphStats& s) {
  std::ostringstream out;
  csv::write_row(out, {medium, period, slice, unit, std::to_string(s.n), std::to_string(s.L),
                       json(s.density).dump(), json(s.mean_degree).dump(), json(s.mean_path_length).dump(),
                       json(s.clustering).dump(), json(s.assortativity).dump(), json(s.modularity).dump()});
  return out.str();
}

// ---------------------------------------------------------------------------
// Alignment inputs

struct PreparedPair {
  TuningPair pair;
  std::vector<std::string> row_ids, col_ids;    // alignment kinds
  std::vector<std::string> eval_rows, eval_cols;  // gold kinds
  UnitKind eval_row_kind = UnitKind::Chapter, eval_col_kind = UnitKind::Chapter;
  bool has_gold = false;
};

UnitKind text_kind(const json& cfg, const std::string& medium, UnitKind align_kind) {
  const auto text_kinds = keyed(cfg, "text_kinds");
  const UnitKind tk = text_kinds.count(medium) ? parse_kind(text_kinds.at(medium)) : align_kind;
  if (tk < align_kind) throw UsageError("text kind for '" + medium + "' is finer than its alignment kind");
  return tk;
}

Eigen::MatrixXd embeddings_for(const json& cfg, const std::string& medium, const std::vector<std::string>& ids) {
  const auto files = keyed(cfg, "embeddings");
  if (!files.count(medium)) throw UsageError("--embeddings has no file for '" + medium + "'");
  const auto vectors = io::read_embeddings(files.at(medium));
  Eigen::MatrixXd rows;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto it = vectors.find(ids[i]);
    if (it == vectors.end()) throw std::invalid_argument("no embedding for unit '" + ids[i] + "'");
    if (i == 0) rows.resize(static_cast<Eigen::Index>(ids.size()), it->second.size());
    if (it->second.size() != rows.cols())
      throw std::invalid_argument("embedding of unit '" + ids[i] + "' has the wrong dimension");
    rows.row(static_cast<Eigen::Index>(i)) = it->second.transpose();
  }
  return rows;
}

std::vector<std::string> summaries_for(const json& cfg, const std::string& medium,
                                       const std::vector<std::string>& ids, const Context& ctx) {
  const auto files = keyed(cfg, "summaries");
  if (!files.count(medium)) throw UsageError("--summaries has no file for '" + medium + "'");
  const auto summaries = io::read_summaries(files.at(medium));
  std::vector<std::string> docs;
  for (const auto& id : ids) {
    const auto it = summaries.find(id);
    if (it == summaries.end()) ctx.err << "warning: no summary for unit '" << id << "'\n";
    docs.push_back(it == summaries.end() ? std::string() : it->second);
  }
  return docs;
}

PreparedPair prepare_pair(const Corpus& corpus, const json& cfg, const std::string& rows_medium,
                          const std::string& cols_medium, const std::string& gold_path, const Context& ctx) {
  const PeriodSpec& period = corpus.period(required(cfg, "period"));
  const std::vector<std::string> media{rows_medium, cols_medium};
  const auto names = choose_characters(corpus, cfg, media, period);
  const auto kinds = kind_map(cfg);
  const UnitKind kr = kind_for(corpus, kinds, rows_medium), kc = kind_for(corpus, kinds, cols_medium);
  const SliceMode mode = parse_choice<SliceMode>(cfg, "mode", {{"instant", SliceMode::Instant},
                                                               {"cumulative", SliceMode::Cumulative}});
  const DynamicNetwork dr = build_dynamic(corpus, rows_medium, kr, period, names, mode);
  const DynamicNetwork dc = build_dynamic(corpus, cols_medium, kc, period, names, mode);

  PreparedPair p;
  p.pair.name = rows_medium + ":" + cols_medium;
  p.row_ids = dr.unit_ids;
  p.col_ids = dc.unit_ids;

  const std::string structure = str(cfg, "structural");
  if (structure != "none") {
    const auto repr = parse_choice<StructureRepr>(cfg, "structural", {{"vertices", StructureRepr::Vertices},
                                                                      {"edges", StructureRepr::Edges}});
    const auto weighting = parse_choice<StructureWeighting>(
        cfg, "weighting", {{"jaccard", StructureWeighting::Jaccard},
                           {"ruzicka-inverse", StructureWeighting::RuzickaInverse}});
    p.pair.structural = structural_similarity(dr, dc, repr, weighting, names).values;
  }

  const std::string text = str(cfg, "text");
  if (text != "none") {
    if (text != "tfidf" && text != "embeddings") throw UsageError("--text: '" + text + "' is not one of none|tfidf|embeddings");
    const UnitKind tkr = text_kind(cfg, rows_medium, kr), tkc = text_kind(cfg, cols_medium, kc);
    const auto ids_r = units_in_period(corpus, rows_medium, tkr, period);
    const auto ids_c = units_in_period(corpus, cols_medium, tkc, period);
    Eigen::MatrixXd S = text == "embeddings"
                            ? embedding_similarity(embeddings_for(cfg, rows_medium, ids_r),
                                                   embeddings_for(cfg, cols_medium, ids_c))
                            : tfidf_similarity(summaries_for(cfg, rows_medium, ids_r, ctx),
                                               summaries_for(cfg, cols_medium, ids_c, ctx));
    if (tkr != kr || tkc != kc)
      S = extend_matrix(S, ancestor_map(corpus, p.row_ids, tkr, ids_r), ancestor_map(corpus, p.col_ids, tkc, ids_c));
    p.pair.textual = std::move(S);
  }
  if (!p.pair.structural && !p.pair.textual) throw UsageError("no similarity source: set --structural or --text");

  if (!gold_path.empty()) {
    const auto [gkr, gkc] = read_gold_kinds(gold_path);
    p.eval_row_kind = gkr;
    p.eval_col_kind = gkc;
    if (gkr < kr || gkc < kc) throw UsageError("gold kinds are finer than the alignment kinds");
    p.eval_rows = units_in_period(corpus, rows_medium, gkr, period);
    p.eval_cols = units_in_period(corpus, cols_medium, gkc, period);
    p.pair.gold = read_gold(gold_path, p.eval_rows, p.eval_cols).dense();
    if (gkr != kr || gkc != kc) {
      Coarsening c;
      c.row_map = ancestor_map(corpus, p.row_ids, gkr, p.eval_rows);
      c.col_map = ancestor_map(corpus, p.col_ids, gkc, p.eval_cols);
      c.rows = static_cast<Eigen::Index>(p.eval_rows.size());
      c.cols = static_cast<Eigen::Index>(p.eval_cols.size());
      p.pair.coarsening = std::move(c);
    }
    p.has_gold = true;
  } else {
    p.eval_rows = p.row_ids;
    p.eval_cols = p.col_ids;
    p.eval_row_kind = kr;
    p.eval_col_kind = kc;
  }
  return p;
}

AlignParams align_params(const json& cfg) {
  AlignParams p;
  p.aligner = parse_choice<Aligner>(cfg, "aligner", {{"threshold", Aligner::Threshold}, {"sw", Aligner::SmithWaterman}});
  p.alpha = number(cfg, "alpha");
  p.threshold = number(cfg, "threshold");
  p.sw.gap = number(cfg, "gap");
  p.sw.shift = number(cfg, "shift");
  p.sw.min_score = number(cfg, "min_score");
  if (has(cfg, "max_run")) p.sw.max_run = static_cast<int>(integer(cfg, "max_run"));
  return p;
}

json params_json(const AlignParams& p) {
  json j{{"aligner", p.aligner == Aligner::Threshold ? "threshold" : "sw"}, {"alpha", p.alpha}};
  if (p.aligner == Aligner::Threshold) {
    j["threshold"] = p.threshold;
  } else {
    j["gap"] = p.sw.gap;
    j["shift"] = p.sw.shift;
    j["min_score"] = p.sw.min_score;
    j["max_run"] = p.sw.max_run ? json(*p.sw.max_run) : json(nullptr);
  }
  return j;
}

json f1_json(const F1Score& f) {
  return {{"tp", f.tp},
          {"fp", f.fp},
          {"fn", f.fn},
          {"precision", percent(f.precision)},
          {"recall", percent(f.recall)},
          {"f1", percent(f.f1)}};
}

// ---------------------------------------------------------------------------
// Commands

int cmd_validate(const json& cfg, const Context& ctx) {
  const Corpus corpus = open_corpus(cfg);
  ctx.out << "characters: " << corpus.characters().size() << '\n';
  ctx.out << "units: " << corpus.units().size() << '\n';
  json report{{"characters", corpus.characters().size()},
              {"units", corpus.units().size()},
              {"interactions", corpus.interactions().size()},
              {"periods", corpus.periods().size()},
              {"media", json::object()}};
  for (const auto& medium : corpus.media()) {
    json kinds = json::object();
    for (UnitKind k : {UnitKind::Scene, UnitKind::Block, UnitKind::Chapter, UnitKind::Issue, UnitKind::Episode,
                       UnitKind::TopLevel}) {
      const auto n = corpus.units_of(medium, k).size();
      if (n == 0) continue;
      kinds[std::string(to_string(k))] = n;
      ctx.out << "  " << medium << ' ' << to_string(k) << ": " << n << '\n';
    }
    report["media"][medium] = kinds;
  }
  ctx.out << "interactions: " << corpus.interactions().size() << '\n';
  ctx.out << "periods: " << corpus.periods().size() << '\n';
  ctx.emit("validate.json", report.dump(2) + "\n");
  return kSuccess;
}

int cmd_build(const json& cfg, const Context& ctx) {
  const std::string medium = required(cfg, "medium");
  const bool is_static = flag(cfg, "static") || str(cfg, "kind").empty();
  if (flag(cfg, "static") && !str(cfg, "kind").empty()) throw UsageError("--static and --kind are exclusive");
  std::map<std::string, UnitKind> kinds;
  if (!is_static) kinds[medium] = parse_kind(str(cfg, "kind"));
  const Corpus corpus = with_blocks(open_corpus(cfg), kinds, ctx);
  const std::string label = required(cfg, "period");
  const PeriodSpec& period = corpus.period(label);
  std::vector<std::string> media = list(cfg, "media");
  if (media.empty()) media.push_back(medium);
  CharacterFilter filter;
  if (str(cfg, "charset") != "all") filter = choose_characters(corpus, cfg, media, period);
  const bool isolates = flag(cfg, "include_isolates");

  std::string stats = stats_header();
  if (is_static) {
    const NetworkSlice g = build_static(corpus, medium, period, filter, isolates);
    const GraphStats s = compute_stats(g);
    stats += stats_row(medium, label, "", "", s);
    ctx.emit("network.csv", io::edge_list_csv(g));
    ctx.emit("network.json", io::slice_summary(g, medium, label).dump(2) + "\n");
    ctx.emit("stats.csv", stats);
    ctx.emit_viz("network.pgm", io::pgm_heatmap(adjacency(g)));
    ctx.out << "n=" << s.n << " L=" << s.L << " density=" << fixed3(s.density) << " <k>=" << fixed3(s.mean_degree)
            << " <l>=" << fixed3(s.mean_path_length) << " <C>=" << fixed3(s.clustering)
            << " r=" << fixed3(s.assortativity) << " Q=" << fixed3(s.modularity) << '\n';
    return kSuccess;
  }
  const SliceMode mode = parse_choice<SliceMode>(cfg, "mode", {{"instant", SliceMode::Instant},
                                                               {"cumulative", SliceMode::Cumulative}});
  const DynamicNetwork dyn = build_dynamic(corpus, medium, kinds.at(medium), period, filter, mode, isolates);
  for (std::size_t t = 0; t < dyn.slices.size(); ++t)
    stats += stats_row(medium, label, std::to_string(t), dyn.unit_ids[t], compute_stats(dyn.slices[t]));
  ctx.emit("slices.csv", io::dynamic_csv(dyn));
  ctx.emit("slices.json", io::dynamic_summary(dyn).dump(2) + "\n");
  ctx.emit("stats.csv", stats);
  ctx.out << "slices: " << dyn.slices.size() << '\n';
  return kSuccess;
}

int cmd_match(const json& cfg, const Context& ctx) {
  const auto media = list(cfg, "media");
  if (media.size() != 2) throw UsageError("--media needs exactly two media");
  std::map<std::string, UnitKind> kinds = kind_map(cfg);
  const Corpus corpus = with_blocks(open_corpus(cfg), kinds, ctx);
  const PeriodSpec& period = corpus.period(required(cfg, "period"));
  const auto names = choose_characters(corpus, cfg, media, period);
  const std::string method = str(cfg, "method");
  std::map<std::string, std::string> truth;
  if (!str(cfg, "truth").empty()) truth = io::read_correspondence(str(cfg, "truth"));

  Matching m;
  if (method == "ruzicka" || method == "sequential") {
    if (method == "ruzicka") {
      const NetworkSlice g1 = build_static(corpus, media[0], period, names);
      const NetworkSlice g2 = build_static(corpus, media[1], period, names);
      const CharSimilarityMatrix sim = neighborhood_similarity(g1, g2, names);
      ctx.emit("similarity.csv", io::matrix_csv(sim.rows, sim.cols, sim.values, "character"));
      ctx.emit_viz("similarity.pgm", io::pgm_heatmap(sim.values));
      m = mutual_best_match(sim);
    } else {
      const SliceMode mode = parse_choice<SliceMode>(cfg, "mode", {{"instant", SliceMode::Instant},
                                                                   {"cumulative", SliceMode::Cumulative}});
      const DynamicNetwork d1 = build_dynamic(corpus, media[0], kind_for(corpus, kinds, media[0]), period, names, mode);
      const DynamicNetwork d2 = build_dynamic(corpus, media[1], kind_for(corpus, kinds, media[1]), period, names, mode);
      std::optional<std::uint64_t> seed;
      if (has(cfg, "seed")) seed = static_cast<std::uint64_t>(integer(cfg, "seed"));
      m = sequential_match(d1, d2, names, seed);
    }
  } else {
    const auto parsed = parse_match_method(method);
    if (!parsed)
      throw UsageError("--method: '" + method +
                       "' is not one of convex|indefinite|concave|percolation|umeyama|ruzicka|sequential");
    const WeightKind weights = parse_choice<WeightKind>(
        cfg, "weights", {{"normalized", WeightKind::Normalized}, {"raw", WeightKind::Raw}, {"binary", WeightKind::Binary}});
    const NetworkSlice g1 = build_static(corpus, media[0], period, names);
    const NetworkSlice g2 = build_static(corpus, media[1], period, names);
    MatchProblem problem = pad_graphs(g1, g2, weights);
    if (flag(cfg, "centre")) problem = centre(std::move(problem));
    if (flag(cfg, "sex") || flag(cfg, "affiliation"))
      problem.prior = attribute_prior(corpus, problem.labels1, problem.labels2, flag(cfg, "sex"), flag(cfg, "affiliation"));
    if (!str(cfg, "seeds").empty()) {
      const auto seeds = io::read_correspondence(str(cfg, "seeds"));
      const std::vector<std::pair<std::string, std::string>> pairs(seeds.begin(), seeds.end());
      problem.add_seeds_by_label(pairs);
    } else if (*parsed == MatchMethod::Percolation) {
      // Default seed: the most important character present on both sides.
      const ImportanceTable table = compute_importance(corpus, media, period);
      for (const auto& entry : table.ranked) {
        if (!g1.index_of(entry.name) || !g2.index_of(entry.name)) continue;
        const std::vector<std::pair<std::string, std::string>> pair{{entry.name, entry.name}};
        problem.add_seeds_by_label(pair);
        ctx.err << "seeding with '" << entry.name << "'\n";
        break;
      }
    }
    AdaptiveOptions opts;
    opts.relax.max_iter = static_cast<std::size_t>(integer(cfg, "max_iter"));
    opts.relax.tol = number(cfg, "tol");
    opts.relax.prior_weight = number(cfg, "prior_weight");
    opts.percolation.prior_weight = number(cfg, "prior_weight");
    opts.percolation.r = static_cast<int>(integer(cfg, "threshold_r"));
    opts.soft_weight = number(cfg, "soft_weight");
    const std::string adaptive = str(cfg, "adaptive");
    const auto per_round = static_cast<std::size_t>(integer(cfg, "seeds_per_round"));
    if (flag(cfg, "temporal")) {
      const DynamicNetwork d1 = build_dynamic(corpus, media[0], kind_for(corpus, kinds, media[0]), period, names,
                                              SliceMode::Cumulative);
      const DynamicNetwork d2 = build_dynamic(corpus, media[1], kind_for(corpus, kinds, media[1]), period, names,
                                              SliceMode::Cumulative);
      m = match_adaptive_temporal(d1, d2, *parsed, per_round, opts);
    } else if (adaptive == "none") {
      m = run_matcher(problem, *parsed, opts);
    } else {
      const SeedMode mode = parse_choice<SeedMode>(cfg, "adaptive", {{"hard", SeedMode::Hard}, {"soft", SeedMode::Soft}});
      m = match_adaptive(problem, *parsed, mode, static_cast<std::size_t>(integer(cfg, "rounds")), per_round, opts);
    }
  }

  json result{{"method", m.method}, {"matched", m.matched()}, {"converged", m.converged}, {"details", m.config}};
  try {
    const double acc = evaluate_matching(m, truth);
    result["accuracy"] = percent(acc);
    ctx.out << m.method << ": " << pct(acc) << "% correct (" << m.matched() << " matched)\n";
  } catch (const std::invalid_argument& e) {
    result["accuracy"] = nullptr;
    ctx.err << "warning: accuracy not computed: " << e.what() << '\n';
  }
  ctx.emit("matching.csv", io::matching_csv(m));
  ctx.emit("result.json", result.dump(2) + "\n");
  return kSuccess;
}

int cmd_centrality(const json& cfg, const Context& ctx) {
  const auto media = list(cfg, "media");
  if (media.empty()) throw UsageError("--media needs at least one medium");
  const Corpus corpus = open_corpus(cfg);
  const PeriodSpec& period = corpus.period(required(cfg, "period"));
  const auto names = choose_characters(corpus, cfg, media, period);
  const PathLength lengths = parse_choice<PathLength>(
      cfg, "lengths", {{"inverse-normalized", PathLength::InverseNormalized}, {"inverse-raw", PathLength::InverseRaw}});
  const auto linkage = parse_linkage(str(cfg, "linkage"));
  if (!linkage) throw UsageError("--linkage: '" + str(cfg, "linkage") + "' is not one of average|complete|single|ward");
  std::optional<int> clusters;
  if (has(cfg, "clusters")) clusters = static_cast<int>(integer(cfg, "clusters"));

  std::vector<std::string> metric_names(kMetricNames.begin(), kMetricNames.end());
  std::vector<Partition> partitions;
  for (const auto& medium : media) {
    const NetworkSlice g = build_static(corpus, medium, period, names);
    const CentralityProfile prof = compute_profiles(g, names, lengths);
    const Eigen::MatrixXd rho = spearman_matrix(prof);
    const Partition part = cluster_profiles(prof, clusters, *linkage);
    ctx.emit("profiles_" + medium + ".csv", io::profiles_csv(prof));
    ctx.emit("spearman_" + medium + ".csv", io::matrix_csv(metric_names, metric_names, rho, "metric"));
    ctx.emit("partition_" + medium + ".csv", io::partition_csv(part));
    ctx.emit("centroids_" + medium + ".csv", io::centroids_csv(cluster_centroids(prof, part)));
    ctx.emit_viz("spearman_" + medium + ".pgm", io::pgm_heatmap(rho));
    const int k = part.cluster.empty() ? 0 : *std::max_element(part.cluster.begin(), part.cluster.end()) + 1;
    ctx.out << medium << ": " << prof.characters.size() << " characters, " << k << " clusters\n";
    partitions.push_back(part);
  }
  std::ostringstream table;
  csv::write_row(table, {"medium_a", "medium_b", "ari"});
  for (std::size_t a = 0; a < media.size(); ++a)
    for (std::size_t b = a + 1; b < media.size(); ++b) {
      const double v = ari(partitions[a], partitions[b]);
      csv::write_row(table, {media[a], media[b], json(v).dump()});
      ctx.out << "ARI " << media[a] << " vs " << media[b] << ": " << std::fixed << std::setprecision(2) << v << '\n';
    }
  ctx.emit("ari.csv", table.str());
  return kSuccess;
}

int cmd_align(const json& cfg, const Context& ctx) {
  const auto media = list(cfg, "media");
  if (media.size() != 2) throw UsageError("--media needs exactly two media (rows, columns)");
  const Corpus corpus = with_blocks(open_corpus(cfg), kind_map(cfg), ctx);
  const PreparedPair p = prepare_pair(corpus, cfg, media[0], media[1], str(cfg, "gold"), ctx);
  const AlignParams params = align_params(cfg);
  const Eigen::MatrixXd S = p.pair.similarity(params.alpha);
  const BinaryMatrix fine = params.aligner == Aligner::Threshold ? align_threshold(S, params.threshold)
                                                                 : align_smith_waterman(S, params.sw);
  ctx.emit("similarity.csv", io::matrix_csv(p.row_ids, p.col_ids, S, "unit_id"));
  ctx.emit("alignment.csv", io::alignment_csv(p.row_ids, p.col_ids, fine));
  ctx.emit_viz("similarity.pgm", io::pgm_heatmap(S));
  ctx.emit_viz("alignment.pgm", io::pgm_binary(fine));
  ctx.out << "aligned " << fine.count() << " unit pairs (" << p.row_ids.size() << " x " << p.col_ids.size() << ")\n";
  if (!p.has_gold) return kSuccess;

  BinaryMatrix coarse = fine;
  if (p.pair.coarsening) {
    const auto& c = *p.pair.coarsening;
    coarse = coarsen_alignment(fine, c.row_map, c.col_map, c.rows, c.cols);
    ctx.emit("alignment_eval.csv", io::alignment_csv(p.eval_rows, p.eval_cols, coarse));
  }
  const F1Score f = evaluate_f1(coarse, p.pair.gold);
  ctx.emit_viz("confusion.pgm", io::pgm_confusion(coarse, p.pair.gold));
  json report{{"params", params_json(params)}, {"score", f1_json(f)}};
  ctx.out << "F1 " << pct(f.f1) << " (P " << pct(f.precision) << ", R " << pct(f.recall) << ")\n";

  if (flag(cfg, "windows")) {
    const auto side = parse_choice<WindowSide>(cfg, "window_side", {{"columns", WindowSide::Columns},
                                                                   {"rows", WindowSide::Rows}});
    const std::string& medium = side == WindowSide::Columns ? media[1] : media[0];
    const auto& ids = side == WindowSide::Columns ? p.eval_cols : p.eval_rows;
    const PeriodSpec& period = corpus.period(str(cfg, "period"));
    const auto tops = units_in_period(corpus, medium, UnitKind::TopLevel, period);
    const auto window_of = ancestor_map(corpus, ids, UnitKind::TopLevel, tops);
    const auto scores = per_window_f1(coarse, p.pair.gold, window_of, side);
    std::ostringstream table;
    csv::write_row(table, {"window", "unit_id", "tp", "fp", "fn", "f1"});
    for (std::size_t w = 0; w < scores.size(); ++w) {
      csv::write_row(table, {std::to_string(w), tops[w], std::to_string(scores[w].tp), std::to_string(scores[w].fp),
                             std::to_string(scores[w].fn), pct(scores[w].f1)});
      ctx.out << "  " << tops[w] << ": F1 " << pct(scores[w].f1) << '\n';
    }
    ctx.emit("windows.csv", table.str());
  }
  ctx.emit("f1.json", report.dump(2) + "\n");
  return kSuccess;
}

int cmd_tune(const json& cfg, const Context& ctx) {
  struct Spec {
    std::string rows, cols, gold;
  };
  std::vector<Spec> specs;
  std::map<std::string, UnitKind> kinds = kind_map(cfg);
  for (const auto& item : list(cfg, "pairs")) {
    const auto a = item.find(':');
    const auto b = a == std::string::npos ? a : item.find(':', a + 1);
    if (b == std::string::npos) throw UsageError("--pairs: expected rows:cols:gold.csv, got '" + item + "'");
    specs.push_back({item.substr(0, a), item.substr(a + 1, b - a - 1), item.substr(b + 1)});
  }
  if (specs.empty()) throw UsageError("--pairs needs at least one rows:cols:gold.csv entry");
  const Corpus corpus = with_blocks(open_corpus(cfg), kinds, ctx);
  std::vector<TuningPair> pairs;
  for (const auto& s : specs) pairs.push_back(prepare_pair(corpus, cfg, s.rows, s.cols, s.gold, ctx).pair);

  const Aligner aligner = parse_choice<Aligner>(cfg, "aligner", {{"threshold", Aligner::Threshold},
                                                                 {"sw", Aligner::SmithWaterman}});
  TuningGrid grid = TuningGrid::defaults();
  if (!list(cfg, "alphas").empty()) grid.alphas = numbers(cfg, "alphas");
  if (!list(cfg, "gaps").empty()) grid.gaps = numbers(cfg, "gaps");
  if (!list(cfg, "shifts").empty()) grid.shifts = numbers(cfg, "shifts");
  if (!list(cfg, "min_scores").empty()) grid.min_scores = numbers(cfg, "min_scores");
  grid.threshold_quantiles = static_cast<std::size_t>(integer(cfg, "quantiles"));

  json report = json::object();
  const std::string target = str(cfg, "target");
  if (!target.empty()) {
    std::vector<TuningPair> dev;
    const TuningPair* held = nullptr;
    for (const auto& p : pairs) {
      if (p.name == target) held = &p;
      else dev.push_back(p);
    }
    if (!held) throw UsageError("--target '" + target + "' is not one of the pairs");
    if (dev.empty()) throw UsageError("--target leaves no development pair");
    const TuningResult tuned = tune_params(dev, aligner, grid);
    const F1Score f = evaluate_f1(align_pair(*held, tuned.params), held->gold);
    report = {{"target", target}, {"params", params_json(tuned.params)}, {"dev_mean_f1", percent(tuned.mean_f1)},
              {"score", f1_json(f)}};
    ctx.out << target << ": F1 " << pct(f.f1) << " with " << params_json(tuned.params).dump() << '\n';
  } else if (flag(cfg, "leave_one_out")) {
    std::ostringstream table;
    csv::write_row(table, {"target", "params", "dev_mean_f1", "precision", "recall", "f1"});
    report["held_out"] = json::array();
    for (const auto& r : leave_one_pair_out(pairs, aligner, grid)) {
      const json pj = params_json(r.tuned.params);
      csv::write_row(table, {r.target, pj.dump(), pct(r.tuned.mean_f1), pct(r.score.precision), pct(r.score.recall),
                             pct(r.score.f1)});
      report["held_out"].push_back({{"target", r.target}, {"params", pj}, {"score", f1_json(r.score)}});
      ctx.out << r.target << ": F1 " << pct(r.score.f1) << " with " << pj.dump() << '\n';
    }
    ctx.emit("heldout.csv", table.str());
  } else {
    const TuningResult tuned = tune_params(pairs, aligner, grid);
    report = {{"params", params_json(tuned.params)}, {"mean_f1", percent(tuned.mean_f1)}};
    ctx.out << "mean F1 " << pct(tuned.mean_f1) << " with " << params_json(tuned.params).dump() << '\n';
  }
  ctx.emit("tuned.json", report.dump(2) + "\n");
  return kSuccess;
}

// ---------------------------------------------------------------------------
// Option tables

std::vector<OptSpec> common_options() {
  return {
      {"corpus", Type::Str, "", "corpus directory (characters.csv, units.csv, interactions.csv, ...)"},
      {"lenient", Type::Flag, false, "turn unknown character names into unnamed characters"},
      {"seed", Type::Int, nullptr, "random seed; enables randomized tie-breaks where supported"},
      {"viz", Type::Flag, false, "also write PGM images"},
  };
}

std::vector<OptSpec> selection_options(const char* default_set) {
  return {
      {"period", Type::Str, "", "period label from periods.csv"},
      {"charset", Type::Str, default_set, "character set: all|named|common|topk"},
      {"k", Type::Int, 20, "size of the top-k character set"},
      {"extra", Type::List, json::array(), "characters forced into the set"},
  };
}

std::vector<OptSpec> alignment_options() {
  return {
      {"kinds", Type::List, json::array(), "alignment unit kind per medium, medium=kind"},
      {"mode", Type::Str, "instant", "slice mode: instant|cumulative"},
      {"structural", Type::Str, "vertices", "structural similarity: none|vertices|edges"},
      {"weighting", Type::Str, "jaccard", "structural weighting: jaccard|ruzicka-inverse"},
      {"text", Type::Str, "none", "textual similarity: none|tfidf|embeddings"},
      {"summaries", Type::List, json::array(), "summary CSV per medium, medium=path"},
      {"embeddings", Type::List, json::array(), "embedding CSV per medium, medium=path"},
      {"text_kinds", Type::List, json::array(), "unit kind of the text files per medium, medium=kind"},
      {"aligner", Type::Str, "sw", "aligner: threshold|sw"},
  };
}

std::vector<Command> commands() {
  std::vector<Command> cmds;
  cmds.push_back({"validate", "Load and validate a corpus", {}, cmd_validate});

  Command build{"build", "Build a static or dynamic network and its statistics", selection_options("all"), cmd_build};
  build.options.insert(build.options.end(),
                       {{"medium", Type::Str, "", "medium to build"},
                        {"media", Type::List, json::array(), "media used for common/topk selection"},
                        {"static", Type::Flag, false, "static network (default when --kind is absent)"},
                        {"kind", Type::Str, "", "slice unit kind for a dynamic network"},
                        {"mode", Type::Str, "instant", "slice mode: instant|cumulative"},
                        {"include_isolates", Type::Flag, false, "keep characters without edges"}});
  cmds.push_back(std::move(build));

  Command match{"match", "Match characters across two media", selection_options("common"), cmd_match};
  match.options.insert(match.options.end(),
                       {{"media", Type::List, json::array(), "the two media to match"},
                        {"method", Type::Str, "indefinite",
                         "convex|indefinite|concave|percolation|umeyama|ruzicka|sequential"},
                        {"kinds", Type::List, json::array(), "slice kind per medium for sequential/temporal runs"},
                        {"mode", Type::Str, "instant", "slice mode for sequential matching"},
                        {"weights", Type::Str, "normalized", "adjacency weights: normalized|raw|binary"},
                        {"centre", Type::Flag, false, "centre adjacencies (2x - 1)"},
                        {"seeds", Type::Str, "", "hard seed pairs (char_side1,char_side2)"},
                        {"truth", Type::Str, "", "correspondence file for renamed characters"},
                        {"sex", Type::Flag, false, "use the sex attribute prior"},
                        {"affiliation", Type::Flag, false, "use the affiliation attribute prior"},
                        {"prior_weight", Type::Num, 1.0, "weight of the prior term"},
                        {"adaptive", Type::Str, "none", "adaptive seeding: none|hard|soft"},
                        {"temporal", Type::Flag, false, "adaptive seeding along cumulative slices"},
                        {"rounds", Type::Int, 5, "adaptive rounds"},
                        {"seeds_per_round", Type::Int, 5, "pairs promoted per adaptive round"},
                        {"soft_weight", Type::Num, 0.0, "soft seed weight (<= 0: automatic)"},
                        {"max_iter", Type::Int, 50, "Frank-Wolfe iterations"},
                        {"tol", Type::Num, 1e-6, "Frank-Wolfe tolerance"},
                        {"threshold_r", Type::Int, 2, "percolation mark threshold"}});
  cmds.push_back(std::move(match));

  Command cent{"centrality", "Centrality profiles, correlations, clusters and ARI", selection_options("common"),
               cmd_centrality};
  cent.options.insert(cent.options.end(),
                      {{"media", Type::List, json::array(), "media to profile"},
                       {"lengths", Type::Str, "inverse-normalized", "path lengths: inverse-normalized|inverse-raw"},
                       {"linkage", Type::Str, "average", "linkage: average|complete|single|ward"},
                       {"clusters", Type::Int, nullptr, "fixed number of clusters (default: silhouette)"}});
  cmds.push_back(std::move(cent));

  Command align{"align", "Align the plots of two media", selection_options("common"), cmd_align};
  const auto aopts = alignment_options();
  align.options.insert(align.options.end(), aopts.begin(), aopts.end());
  align.options.insert(align.options.end(),
                       {{"media", Type::List, json::array(), "row medium and column medium"},
                        {"alpha", Type::Num, 1.0, "structural weight in the hybrid similarity"},
                        {"threshold", Type::Num, 0.5, "threshold on the normalized similarity"},
                        {"gap", Type::Num, 0.2, "Smith-Waterman gap penalty"},
                        {"shift", Type::Num, 0.5, "Smith-Waterman similarity shift"},
                        {"min_score", Type::Num, 1.0, "minimal segment score"},
                        {"max_run", Type::Int, nullptr, "cap on consecutive vertical or horizontal moves"},
                        {"gold", Type::Str, "", "reference alignment CSV"},
                        {"windows", Type::Flag, false, "report F1 per top-level window"},
                        {"window_side", Type::Str, "columns", "window side: columns|rows"}});
  cmds.push_back(std::move(align));

  Command tune{"tune", "Grid-search alignment parameters", selection_options("common"), cmd_tune};
  tune.options.insert(tune.options.end(), aopts.begin(), aopts.end());
  tune.options.insert(tune.options.end(),
                      {{"pairs", Type::List, json::array(), "rows:cols:gold.csv entries"},
                       {"target", Type::Str, "", "held-out pair rows:cols (tune on the others)"},
                       {"leave_one_out", Type::Flag, false, "hold out every pair in turn"},
                       {"alphas", Type::List, json::array(), "alpha grid"},
                       {"gaps", Type::List, json::array(), "gap grid"},
                       {"shifts", Type::List, json::array(), "shift grid"},
                       {"min_scores", Type::List, json::array(), "min_score grid"},
                       {"quantiles", Type::Int, 50, "number of threshold quantiles"}});
  cmds.push_back(std::move(tune));

  for (auto& c : cmds) {
    auto common = common_options();
    c.options.insert(c.options.begin(), common.begin(), common.end());
  }
  return cmds;
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("config file " + path + ": " + e.what());
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const std::vector<Command> cmds = commands();
  CLI::App app{"Character networks and plot alignment across story adaptations", "storynet"};
  app.require_subcommand(1);

  struct Bound {
    const Command* command;
    CLI::App* sub;
    std::string config_path;
    std::string out_dir;
    std::map<std::string, std::string> scalars;
    std::map<std::string, std::vector<std::string>> lists;
    std::map<std::string, bool> flags;
    std::map<std::string, CLI::Option*> handles;
  };
  std::vector<Bound> bound(cmds.size());
  for (std::size_t i = 0; i < cmds.size(); ++i) {
    Bound& b = bound[i];
    b.command = &cmds[i];
    b.sub = app.add_subcommand(cmds[i].name, cmds[i].description);
    b.sub->add_option("--config", b.config_path, "JSON config file (flags override its values)");
    b.sub->add_option("--out", b.out_dir, "output directory");
    for (const auto& spec : cmds[i].options) {
      const std::string name = cli_name(spec.key);
      switch (spec.type) {
        case Type::Flag: b.handles[spec.key] = b.sub->add_flag(name, b.flags[spec.key], spec.help); break;
        case Type::List:
          b.handles[spec.key] = b.sub->add_option(name, b.lists[spec.key], spec.help)->delimiter(',');
          break;
        default: b.handles[spec.key] = b.sub->add_option(name, b.scalars[spec.key], spec.help); break;
      }
    }
  }

  std::vector<const char*> argv{"storynet"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << "run with --help for usage\n";
    return kUsageError;
  }

  const Bound* active = nullptr;
  for (const auto& b : bound)
    if (b.sub->parsed()) active = &b;
  if (!active) return kUsageError;
  const Command& command = *active->command;

  json cfg = json::object();
  try {
    for (const auto& spec : command.options) cfg[spec.key] = spec.fallback;
    if (!active->config_path.empty()) {
      const json file = load_config_file(active->config_path);
      if (!file.is_object()) throw UsageError("config file must hold a JSON object");
      for (const auto& [key, value] : file.items()) {
        if (key == "command") {
          if (value != command.name)
            throw UsageError("config file is for '" + value.dump() + "', not '" + command.name + "'");
          continue;
        }
        const auto spec = std::find_if(command.options.begin(), command.options.end(),
                                       [&](const OptSpec& s) { return s.key == key; });
        if (spec == command.options.end()) throw UsageError("config file: unknown key '" + key + "'");
        if (!type_matches(*spec, value)) throw UsageError("config file: wrong type for '" + key + "'");
        cfg[key] = value;
      }
    }
    for (const auto& spec : command.options) {
      if (active->handles.at(spec.key)->count() == 0) continue;
      switch (spec.type) {
        case Type::Flag: cfg[spec.key] = true; break;
        case Type::List: cfg[spec.key] = active->lists.at(spec.key); break;
        default: cfg[spec.key] = convert(spec, active->scalars.at(spec.key)); break;
      }
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }

  Context ctx{active->out_dir, cfg.at("viz").get<bool>(), out, err};
  try {
    const int code = command.handler(cfg, ctx);
    json snapshot = cfg;
    snapshot["command"] = command.name;
    ctx.emit("config.json", snapshot.dump(2) + "\n");
    return code;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const LoadError& e) {
    for (const auto& d : e.diagnostics()) err << d.file << ':' << d.line << ": " << d.message << '\n';
    return kValidationError;
  } catch (const csv::FileError& e) {
    err << e.file() << ':' << e.line() << ": " << e.message() << '\n';
    return kValidationError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  }
}

}  // namespace storynet::cli
