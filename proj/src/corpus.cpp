#include "storynet/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

#include "storynet/csv.hpp"

namespace storynet {

namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::optional<int> parse_int(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
  return value;
}

std::optional<bool> parse_bool(std::string_view text) {
  const std::string t = lower(normalize_name(text));
  if (t == "true" || t == "1" || t == "yes" || t == "y") return true;
  if (t == "false" || t == "0" || t == "no" || t == "n") return false;
  return std::nullopt;
}

constexpr std::string_view kDefaultTopLevel = "toplevel";

}  // namespace

std::string_view to_string(Sex sex) {
  switch (sex) {
    case Sex::Male: return "Male";
    case Sex::Female: return "Female";
    case Sex::Unknown: return "Unknown";
    case Sex::Mixed: return "Mixed";
  }
  return "Unknown";
}

std::string_view to_string(UnitKind kind) {
  switch (kind) {
    case UnitKind::Scene: return "scene";
    case UnitKind::Block: return "block";
    case UnitKind::Chapter: return "chapter";
    case UnitKind::Issue: return "issue";
    case UnitKind::Episode: return "episode";
    case UnitKind::TopLevel: return kDefaultTopLevel;
  }
  return kDefaultTopLevel;
}

std::optional<Sex> parse_sex(std::string_view text) {
  const std::string t = lower(normalize_name(text));
  if (t == "m" || t == "male") return Sex::Male;
  if (t == "f" || t == "female") return Sex::Female;
  if (t.empty() || t == "u" || t == "unknown") return Sex::Unknown;
  if (t == "mixed" || t == "x") return Sex::Mixed;
  return std::nullopt;
}

std::optional<UnitKind> parse_unit_kind(std::string_view text) {
  const std::string t = lower(normalize_name(text));
  if (t == "scene") return UnitKind::Scene;
  if (t == "block") return UnitKind::Block;
  if (t == "chapter") return UnitKind::Chapter;
  if (t == "issue") return UnitKind::Issue;
  if (t == "episode") return UnitKind::Episode;
  if (t == "toplevel" || t == "book" || t == "volume" || t == "season") return UnitKind::TopLevel;
  return std::nullopt;
}

bool PeriodSpec::covers(std::string_view medium, int top_level_ordinal) const {
  const auto it = ranges.find(std::string(medium));
  return it != ranges.end() && top_level_ordinal >= it->second.first &&
         top_level_ordinal <= it->second.last;
}

namespace {
std::string join_diagnostics(const std::vector<Diagnostic>& diagnostics) {
  std::ostringstream out;
  out << diagnostics.size() << " corpus error(s)";
  for (const auto& d : diagnostics) out << "\n  " << d.file << ':' << d.line << ": " << d.message;
  return out.str();
}
}  // namespace

LoadError::LoadError(std::vector<Diagnostic> diagnostics)
    : std::runtime_error(join_diagnostics(diagnostics)), diagnostics_(std::move(diagnostics)) {}

std::string normalize_name(std::string_view name) {
  std::string out;
  out.reserve(name.size());
  bool pending_space = false;
  for (char c : name) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

CorpusPaths CorpusPaths::in_directory(const std::filesystem::path& dir) {
  return CorpusPaths{dir / "characters.csv", dir / "aliases.csv", dir / "units.csv",
                     dir / "interactions.csv", dir / "periods.csv"};
}

// ---------------------------------------------------------------------------
// Validation

namespace {

std::size_t line_at(const std::vector<std::size_t>& lines, std::size_t i) {
  return i < lines.size() ? lines[i] : 0;
}

}  // namespace

Corpus build_corpus(CorpusRecords records, bool strict) {
  std::vector<Diagnostic> diags;
  auto report = [&diags](const std::string& file, std::size_t line, std::string message) {
    diags.push_back(Diagnostic{file, line, std::move(message)});
  };

  Corpus corpus;

  // Characters
  std::map<std::string, CharacterRecord> characters;
  for (std::size_t i = 0; i < records.characters.size(); ++i) {
    CharacterRecord c = std::move(records.characters[i]);
    c.canonical_name = normalize_name(c.canonical_name);
    const std::size_t line = line_at(records.character_lines, i);
    if (c.canonical_name.empty()) {
      report(records.characters_file, line, "empty canonical name");
      continue;
    }
    if (characters.count(c.canonical_name)) {
      report(records.characters_file, line, "duplicate canonical name '" + c.canonical_name + "'");
      continue;
    }
    c.aliases.clear();
    characters.emplace(c.canonical_name, std::move(c));
  }

  auto create_unnamed = [&characters](const std::string& name) {
    CharacterRecord c;
    c.canonical_name = name;
    c.named = false;
    characters.emplace(name, std::move(c));
  };

  // Aliases: targets may chain through other aliases; chains must end at a
  // canonical name.
  std::map<std::string, std::string> alias_target;
  std::map<std::string, std::size_t> alias_line;
  for (std::size_t i = 0; i < records.aliases.size(); ++i) {
    const std::string alias = normalize_name(records.aliases[i].first);
    const std::string target = normalize_name(records.aliases[i].second);
    const std::size_t line = line_at(records.alias_lines, i);
    if (alias.empty() || target.empty()) {
      report(records.aliases_file, line, "empty alias or target");
      continue;
    }
    if (alias == target) continue;
    if (characters.count(alias)) {
      report(records.aliases_file, line,
             "alias '" + alias + "' is already the canonical name of another character");
      continue;
    }
    const auto [it, inserted] = alias_target.emplace(alias, target);
    if (!inserted && it->second != target) {
      report(records.aliases_file, line,
             "alias '" + alias + "' maps to both '" + it->second + "' and '" + target + "'");
      continue;
    }
    alias_line.emplace(alias, line);
  }

  std::set<std::set<std::string>> reported_cycles;
  for (const auto& [alias, first_target] : alias_target) {
    std::vector<std::string> chain{alias};
    std::string current = first_target;
    bool ok = true;
    while (!characters.count(current)) {
      const auto next = alias_target.find(current);
      if (next == alias_target.end()) {
        if (strict) {
          report(records.aliases_file, alias_line[alias],
                 "alias '" + alias + "' maps to unknown character '" + current + "'");
          ok = false;
        } else {
          create_unnamed(current);
        }
        break;
      }
      const auto seen = std::find(chain.begin(), chain.end(), current);
      if (seen != chain.end()) {
        std::set<std::string> members(seen, chain.end());
        if (reported_cycles.insert(members).second) {
          std::string listing;
          for (auto it = seen; it != chain.end(); ++it) listing += *it + " -> ";
          listing += current;
          report(records.aliases_file, alias_line[alias], "alias cycle: " + listing);
        }
        ok = false;
        break;
      }
      chain.push_back(current);
      current = next->second;
    }
    if (ok) {
      corpus.alias_to_canonical_[alias] = current;
      characters[current].aliases.insert(alias);
    }
  }

  // Units
  std::map<std::string, std::size_t> unit_pos;
  std::vector<std::size_t> unit_lines;
  for (std::size_t i = 0; i < records.units.size(); ++i) {
    NarrativeUnit u = std::move(records.units[i]);
    u.id = normalize_name(u.id);
    u.medium = normalize_name(u.medium);
    const std::size_t line = line_at(records.unit_lines, i);
    if (u.id.empty() || u.medium.empty()) {
      report(records.units_file, line, "unit with empty id or medium");
      continue;
    }
    if (u.ordinal < 0) {
      report(records.units_file, line, "negative ordinal for unit '" + u.id + "'");
      continue;
    }
    if (!unit_pos.emplace(u.id, corpus.units_.size()).second) {
      report(records.units_file, line, "duplicate unit id '" + u.id + "'");
      continue;
    }
    corpus.units_.push_back(std::move(u));
    unit_lines.push_back(line);
  }

  std::map<std::pair<std::string, UnitKind>, std::vector<int>> ordinals;
  for (const auto& u : corpus.units_) ordinals[{u.medium, u.kind}].push_back(u.ordinal);
  for (auto& [key, values] : ordinals) {
    std::sort(values.begin(), values.end());
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (values[k] != static_cast<int>(k)) {
        report(records.units_file, 0,
               "ordinals of " + key.first + "/" + std::string(to_string(key.second)) +
                   " units are not the contiguous range 0.." + std::to_string(values.size() - 1) +
                   " (found " + std::to_string(values[k]) + " at position " + std::to_string(k) +
                   ")");
        break;
      }
    }
  }

  bool parents_ok = true;
  for (std::size_t i = 0; i < corpus.units_.size(); ++i) {
    const auto& u = corpus.units_[i];
    for (const auto& [kind, parent_id] : u.parent_ids) {
      const auto it = unit_pos.find(parent_id);
      if (it == unit_pos.end()) {
        report(records.units_file, unit_lines[i],
               "unit '" + u.id + "' has dangling parent '" + parent_id + "'");
        parents_ok = false;
        continue;
      }
      const auto& p = corpus.units_[it->second];
      if (p.kind != kind || p.medium != u.medium || p.kind <= u.kind) {
        report(records.units_file, unit_lines[i],
               "unit '" + u.id + "' lists parent '" + parent_id + "' with inconsistent kind or medium");
        parents_ok = false;
      }
    }
  }

  corpus.reindex();

  if (parents_ok) {
    for (std::size_t i = 0; i < corpus.units_.size(); ++i) {
      const auto& u = corpus.units_[i];
      if (u.kind != UnitKind::TopLevel && !corpus.ancestor(u, UnitKind::TopLevel))
        report(records.units_file, unit_lines[i], "unit '" + u.id + "' has no top-level ancestor");
    }
  }

  // Interactions
  for (std::size_t i = 0; i < records.interactions.size(); ++i) {
    InteractionRecord r = std::move(records.interactions[i]);
    const std::size_t line = line_at(records.interaction_lines, i);
    r.unit_id = normalize_name(r.unit_id);
    bool ok = true;
    for (std::string* name : {&r.char_a, &r.char_b}) {
      *name = normalize_name(*name);
      if (name->empty()) {
        report(records.interactions_file, line, "empty character name");
        ok = false;
        continue;
      }
      if (characters.count(*name)) continue;
      if (const auto a = corpus.alias_to_canonical_.find(*name); a != corpus.alias_to_canonical_.end()) {
        *name = a->second;
        continue;
      }
      if (alias_target.count(*name)) {
        // Alias whose resolution already failed and was reported.
        ok = false;
        continue;
      }
      if (strict) {
        report(records.interactions_file, line, "unknown character or alias '" + *name + "'");
        ok = false;
      } else {
        create_unnamed(*name);
      }
    }
    if (r.count <= 0) {
      report(records.interactions_file, line, "interaction count must be positive");
      ok = false;
    }
    if (ok && r.char_a == r.char_b) {
      report(records.interactions_file, line, "self-interaction of '" + r.char_a + "'");
      ok = false;
    }
    const NarrativeUnit* unit = corpus.find_unit(r.unit_id);
    if (!unit) {
      report(records.interactions_file, line, "dangling unit reference '" + r.unit_id + "'");
      ok = false;
    } else if (unit->kind != corpus.finest_kind(unit->medium)) {
      report(records.interactions_file, line,
             "unit '" + r.unit_id + "' is not of the finest annotated kind for medium '" +
                 unit->medium + "'");
      ok = false;
    }
    if (ok) {
      if (r.char_b < r.char_a) std::swap(r.char_a, r.char_b);
      corpus.interactions_.push_back(std::move(r));
    }
  }

  // Periods
  std::map<std::string, PeriodSpec> periods;
  for (auto& p : records.periods) {
    const std::string label = normalize_name(p.label);
    const auto line_it = records.period_lines.find(p.label);
    const std::size_t line = line_it == records.period_lines.end() ? 0 : line_it->second;
    if (label.empty()) {
      report(records.periods_file, line, "empty period label");
      continue;
    }
    for (const auto& [medium, range] : p.ranges) {
      const auto tops = corpus.units_of(medium, UnitKind::TopLevel);
      if (range.first < 0 || range.first > range.last ||
          range.last >= static_cast<int>(tops.size())) {
        report(records.periods_file, line,
               "period '" + label + "' range " + std::to_string(range.first) + ".." +
                   std::to_string(range.last) + " is empty or outside the " +
                   std::to_string(tops.size()) + " top-level units of '" + medium + "'");
      }
    }
    auto& merged = periods[label];
    merged.label = label;
    for (const auto& [medium, range] : p.ranges) {
      if (!merged.ranges.emplace(medium, range).second)
        report(records.periods_file, line,
               "period '" + label + "' defined twice for medium '" + medium + "'");
    }
  }
  for (auto& [label, p] : periods) corpus.periods_.push_back(std::move(p));

  for (auto& [name, c] : characters) corpus.characters_.push_back(std::move(c));
  corpus.reindex();

  if (!diags.empty()) throw LoadError(std::move(diags));
  return corpus;
}

Corpus load_corpus(const CorpusPaths& paths, bool strict) {
  CorpusRecords records;
  std::vector<Diagnostic> diags;
  auto report = [&diags](const std::string& file, std::size_t line, std::string message) {
    diags.push_back(Diagnostic{file, line, std::move(message)});
  };

  auto read = [&](const std::filesystem::path& path, bool optional,
                  std::initializer_list<std::string_view> columns) -> std::optional<csv::Table> {
    if (optional && !std::filesystem::exists(path)) return std::nullopt;
    try {
      csv::Table table = csv::read_file(path);
      for (auto c : columns) table.require_column(c);
      return table;
    } catch (const csv::FileError& e) {
      report(e.file(), e.line(), e.message());
      return std::nullopt;
    }
  };

  records.characters_file = paths.characters.string();
  records.aliases_file = paths.aliases.string();
  records.units_file = paths.units.string();
  records.interactions_file = paths.interactions.string();
  records.periods_file = paths.periods.string();

  if (auto t = read(paths.characters, false, {"canonical_name", "sex", "affiliation", "named"})) {
    const auto cn = t->require_column("canonical_name"), cs = t->require_column("sex"),
               ca = t->require_column("affiliation"), cnamed = t->require_column("named");
    for (const auto& row : t->rows) {
      CharacterRecord c;
      c.canonical_name = row.fields[cn];
      const auto sex = parse_sex(row.fields[cs]);
      const auto named = parse_bool(row.fields[cnamed]);
      if (!sex || !named) {
        report(t->source, row.line, "malformed row: bad sex or named value");
        continue;
      }
      c.sex = *sex;
      c.named = *named;
      c.affiliation = normalize_name(row.fields[ca]);
      records.characters.push_back(std::move(c));
      records.character_lines.push_back(row.line);
    }
  }

  if (auto t = read(paths.aliases, true, {"alias", "canonical_name"})) {
    const auto ca = t->require_column("alias"), cn = t->require_column("canonical_name");
    for (const auto& row : t->rows) {
      records.aliases.emplace_back(row.fields[ca], row.fields[cn]);
      records.alias_lines.push_back(row.line);
    }
  }

  if (auto t = read(paths.units, false, {"id", "medium", "kind", "ordinal", "parent_ids", "location"})) {
    const auto ci = t->require_column("id"), cm = t->require_column("medium"),
               ck = t->require_column("kind"), co = t->require_column("ordinal"),
               cp = t->require_column("parent_ids"), cl = t->require_column("location");
    for (const auto& row : t->rows) {
      NarrativeUnit u;
      u.id = row.fields[ci];
      u.medium = row.fields[cm];
      const auto kind = parse_unit_kind(row.fields[ck]);
      const auto ordinal = parse_int(row.fields[co]);
      if (!kind || !ordinal) {
        report(t->source, row.line, "malformed row: bad kind or ordinal");
        continue;
      }
      u.kind = *kind;
      u.ordinal = *ordinal;
      bool ok = true;
      std::stringstream parents(row.fields[cp]);
      std::string pair;
      while (std::getline(parents, pair, ';')) {
        if (normalize_name(pair).empty()) continue;
        const auto eq = pair.find('=');
        const auto pkind = eq == std::string::npos ? std::nullopt : parse_unit_kind(pair.substr(0, eq));
        if (!pkind) {
          report(t->source, row.line, "malformed parent link '" + pair + "'");
          ok = false;
          break;
        }
        u.parent_ids[*pkind] = normalize_name(pair.substr(eq + 1));
      }
      if (!ok) continue;
      if (const std::string loc = normalize_name(row.fields[cl]); !loc.empty()) u.location = loc;
      records.units.push_back(std::move(u));
      records.unit_lines.push_back(row.line);
    }
  }

  if (auto t = read(paths.interactions, false, {"unit_id", "char_a", "char_b", "count"})) {
    const auto cu = t->require_column("unit_id"), ca = t->require_column("char_a"),
               cb = t->require_column("char_b"), cc = t->require_column("count");
    for (const auto& row : t->rows) {
      InteractionRecord r{row.fields[cu], row.fields[ca], row.fields[cb], 1};
      if (!normalize_name(row.fields[cc]).empty()) {
        const auto count = parse_int(row.fields[cc]);
        if (!count) {
          report(t->source, row.line, "malformed row: bad count");
          continue;
        }
        r.count = *count;
      }
      records.interactions.push_back(std::move(r));
      records.interaction_lines.push_back(row.line);
    }
  }

  if (auto t = read(paths.periods, true, {"label", "medium", "first_ordinal", "last_ordinal"})) {
    const auto cl = t->require_column("label"), cm = t->require_column("medium"),
               cf = t->require_column("first_ordinal"), cx = t->require_column("last_ordinal");
    std::map<std::string, PeriodSpec> by_label;
    for (const auto& row : t->rows) {
      const auto first = parse_int(row.fields[cf]);
      const auto last = parse_int(row.fields[cx]);
      if (!first || !last) {
        report(t->source, row.line, "malformed row: bad ordinal range");
        continue;
      }
      const std::string label = row.fields[cl];
      auto& p = by_label[label];
      p.label = label;
      records.period_lines.emplace(label, row.line);
      if (!p.ranges.emplace(normalize_name(row.fields[cm]), OrdinalRange{*first, *last}).second)
        report(t->source, row.line, "period '" + label + "' defined twice for one medium");
    }
    for (auto& [label, p] : by_label) records.periods.push_back(std::move(p));
  }

  try {
    Corpus corpus = build_corpus(std::move(records), strict);
    if (!diags.empty()) throw LoadError(std::move(diags));
    return corpus;
  } catch (const LoadError& e) {
    diags.insert(diags.end(), e.diagnostics().begin(), e.diagnostics().end());
    throw LoadError(std::move(diags));
  }
}

// ---------------------------------------------------------------------------
// Corpus queries

void Corpus::reindex() {
  character_index_.clear();
  for (std::size_t i = 0; i < characters_.size(); ++i)
    character_index_.emplace(characters_[i].canonical_name, i);
  unit_index_.clear();
  for (std::size_t i = 0; i < units_.size(); ++i) unit_index_.emplace(units_[i].id, i);
  interactions_by_unit_.clear();
  for (std::size_t i = 0; i < interactions_.size(); ++i)
    interactions_by_unit_[interactions_[i].unit_id].push_back(i);
}

const CharacterRecord* Corpus::find_character(std::string_view canonical_name) const {
  const auto it = character_index_.find(std::string(canonical_name));
  return it == character_index_.end() ? nullptr : &characters_[it->second];
}

std::optional<std::string> Corpus::resolve(std::string_view name) const {
  const std::string n = normalize_name(name);
  if (character_index_.count(n)) return n;
  if (const auto it = alias_to_canonical_.find(n); it != alias_to_canonical_.end()) return it->second;
  return std::nullopt;
}

const NarrativeUnit* Corpus::find_unit(std::string_view id) const {
  const auto it = unit_index_.find(std::string(id));
  return it == unit_index_.end() ? nullptr : &units_[it->second];
}

std::vector<const NarrativeUnit*> Corpus::units_of(std::string_view medium, UnitKind kind) const {
  std::vector<const NarrativeUnit*> out;
  for (const auto& u : units_)
    if (u.kind == kind && u.medium == medium) out.push_back(&u);
  std::sort(out.begin(), out.end(),
            [](const NarrativeUnit* a, const NarrativeUnit* b) { return a->ordinal < b->ordinal; });
  return out;
}

const NarrativeUnit* Corpus::ancestor(const NarrativeUnit& unit, UnitKind kind) const {
  if (unit.kind == kind) return &unit;
  if (unit.kind > kind) return nullptr;
  if (const auto it = unit.parent_ids.find(kind); it != unit.parent_ids.end()) return find_unit(it->second);
  for (const auto& [pkind, pid] : unit.parent_ids) {
    if (pkind > kind) continue;
    if (const NarrativeUnit* parent = find_unit(pid))
      if (const NarrativeUnit* found = ancestor(*parent, kind)) return found;
  }
  return nullptr;
}

std::vector<std::string> Corpus::media() const {
  std::set<std::string> media;
  for (const auto& u : units_) media.insert(u.medium);
  return {media.begin(), media.end()};
}

std::optional<UnitKind> Corpus::finest_kind(std::string_view medium) const {
  std::optional<UnitKind> finest;
  for (const auto& u : units_) {
    if (u.medium != medium || u.kind == UnitKind::Block) continue;
    if (!finest || u.kind < *finest) finest = u.kind;
  }
  return finest;
}

std::vector<const InteractionRecord*> Corpus::interactions_in(std::string_view unit_id) const {
  std::vector<const InteractionRecord*> out;
  if (const auto it = interactions_by_unit_.find(std::string(unit_id)); it != interactions_by_unit_.end())
    for (std::size_t i : it->second) out.push_back(&interactions_[i]);
  return out;
}

const PeriodSpec& Corpus::period(std::string_view label) const {
  for (const auto& p : periods_)
    if (p.label == label) return p;
  throw std::invalid_argument("unknown period '" + std::string(label) + "'");
}

bool Corpus::in_period(const NarrativeUnit& unit, const PeriodSpec& period) const {
  const NarrativeUnit* top = ancestor(unit, UnitKind::TopLevel);
  return top && period.covers(unit.medium, top->ordinal);
}

std::vector<const NarrativeUnit*> Corpus::finest_units(std::string_view medium,
                                                       const PeriodSpec& period) const {
  std::vector<const NarrativeUnit*> out;
  const auto kind = finest_kind(medium);
  if (!kind) return out;
  for (const NarrativeUnit* u : units_of(medium, *kind))
    if (in_period(*u, period)) out.push_back(u);
  return out;
}

std::set<std::string> Corpus::cast_of(std::string_view unit_id) const {
  std::set<std::string> cast;
  for (const InteractionRecord* r : interactions_in(unit_id)) {
    cast.insert(r->char_a);
    cast.insert(r->char_b);
  }
  return cast;
}

// ---------------------------------------------------------------------------
// Importance and character sets

const ImportanceTable::Entry* ImportanceTable::find(std::string_view name) const {
  for (const auto& e : ranked)
    if (e.name == name) return &e;
  return nullptr;
}

namespace {

std::vector<const NarrativeUnit*> require_units(const Corpus& corpus, const std::string& medium,
                                                const PeriodSpec& period) {
  auto units = corpus.finest_units(medium, period);
  if (units.empty())
    throw std::invalid_argument("period '" + period.label + "' has no units for medium '" + medium + "'");
  return units;
}

std::set<std::string> present_in(const Corpus& corpus, const std::string& medium, const PeriodSpec& period) {
  std::set<std::string> present;
  for (const NarrativeUnit* u : require_units(corpus, medium, period)) {
    for (const InteractionRecord* r : corpus.interactions_in(u->id)) {
      present.insert(r->char_a);
      present.insert(r->char_b);
    }
  }
  return present;
}

}  // namespace

ImportanceTable compute_importance(const Corpus& corpus, std::span<const std::string> media,
                                   const PeriodSpec& period) {
  if (media.empty()) throw std::invalid_argument("compute_importance: no media requested");
  ImportanceTable table;
  table.media.assign(media.begin(), media.end());
  table.period = period.label;

  std::map<std::string, std::vector<double>> scores;
  for (std::size_t m = 0; m < media.size(); ++m) {
    std::map<std::string, int> occurrences;
    for (const NarrativeUnit* u : require_units(corpus, media[m], period))
      for (const auto& name : corpus.cast_of(u->id)) ++occurrences[name];
    int max_count = 0;
    for (const auto& [name, count] : occurrences) max_count = std::max(max_count, count);
    for (const auto& [name, count] : occurrences) {
      auto& row = scores[name];
      row.resize(media.size(), 0.0);
      row[m] = static_cast<double>(count) / max_count;
    }
  }

  for (auto& [name, row] : scores) {
    double sum = 0.0;
    for (double s : row) sum += s;
    table.ranked.push_back({name, std::move(row), sum / static_cast<double>(media.size())});
  }
  std::sort(table.ranked.begin(), table.ranked.end(), [](const auto& a, const auto& b) {
    return a.mean != b.mean ? a.mean > b.mean : a.name < b.name;
  });
  return table;
}

std::optional<CharacterSet> parse_character_set(std::string_view text) {
  const std::string t = lower(text);
  if (t == "all") return CharacterSet::All;
  if (t == "named") return CharacterSet::Named;
  if (t == "common") return CharacterSet::Common;
  if (t == "topk" || t == "top-k" || t.rfind("top", 0) == 0) return CharacterSet::TopK;
  return std::nullopt;
}

std::vector<std::string> select_characters(const Corpus& corpus, CharacterSet set,
                                           std::span<const std::string> media,
                                           const PeriodSpec& period,
                                           const ImportanceTable* importance, std::size_t k,
                                           std::span<const std::string> extra) {
  if (media.empty()) throw std::invalid_argument("select_characters: no media given");
  if ((set == CharacterSet::Common || set == CharacterSet::TopK) && media.size() < 2)
    throw std::invalid_argument("common and top-k character sets need at least two media");

  std::vector<std::set<std::string>> present;
  for (const auto& m : media) present.push_back(present_in(corpus, m, period));

  auto is_named = [&corpus](const std::string& name) {
    const CharacterRecord* c = corpus.find_character(name);
    return c && c->named;
  };

  std::vector<std::string> selected;
  if (set == CharacterSet::All || set == CharacterSet::Named) {
    std::set<std::string> any;
    for (const auto& p : present) any.insert(p.begin(), p.end());
    for (const auto& name : any)
      if (set == CharacterSet::All || is_named(name)) selected.push_back(name);
  } else {
    std::vector<std::string> common;
    for (const auto& name : present.front()) {
      if (!is_named(name)) continue;
      if (std::all_of(present.begin() + 1, present.end(), [&](const auto& p) { return p.count(name) > 0; }))
        common.push_back(name);
    }
    if (set == CharacterSet::Common) {
      selected = std::move(common);
    } else {
      if (!importance) throw std::invalid_argument("top-k selection requires an importance table");
      std::set<std::string> wanted(media.begin(), media.end());
      std::set<std::string> have(importance->media.begin(), importance->media.end());
      if (wanted != have || importance->period != period.label)
        throw std::invalid_argument("importance table was computed over different media or period");
      if (k > common.size())
        throw std::invalid_argument("k = " + std::to_string(k) + " exceeds the " +
                                    std::to_string(common.size()) + " common characters");
      const std::set<std::string> common_set(common.begin(), common.end());
      for (const auto& e : importance->ranked) {
        if (selected.size() == k) break;
        if (common_set.count(e.name)) selected.push_back(e.name);
      }
    }
  }

  for (const auto& name : extra) {
    const auto canonical = corpus.resolve(name);
    if (!canonical) throw std::invalid_argument("unknown character of interest '" + name + "'");
    if (std::find(selected.begin(), selected.end(), *canonical) == selected.end())
      selected.push_back(*canonical);
  }
  return selected;
}

}  // namespace storynet
