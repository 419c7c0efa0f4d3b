#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace storynet {

enum class Sex { Male, Female, Unknown, Mixed };

/// Narrative unit kinds, ordered from finest to coarsest. TopLevel stands for
/// a book, comic volume or TV season.
enum class UnitKind { Scene, Block, Chapter, Issue, Episode, TopLevel };

std::string_view to_string(Sex sex);
std::string_view to_string(UnitKind kind);
std::optional<Sex> parse_sex(std::string_view text);
std::optional<UnitKind> parse_unit_kind(std::string_view text);

struct CharacterRecord {
  std::string canonical_name;
  std::set<std::string> aliases;
  Sex sex = Sex::Unknown;
  std::string affiliation;
  bool named = true;
};

struct NarrativeUnit {
  std::string id;
  std::string medium;
  UnitKind kind = UnitKind::Scene;
  int ordinal = 0;
  std::map<UnitKind, std::string> parent_ids;
  std::optional<std::string> location;
};

struct InteractionRecord {
  std::string unit_id;
  std::string char_a;
  std::string char_b;
  int count = 1;
};

struct OrdinalRange {
  int first = 0;
  int last = 0;  // inclusive
};

/// Named period such as "U2": an inclusive TopLevel ordinal range per medium.
struct PeriodSpec {
  std::string label;
  std::map<std::string, OrdinalRange> ranges;

  bool covers(std::string_view medium, int top_level_ordinal) const;
};

struct Diagnostic {
  std::string file;
  std::size_t line = 0;
  std::string message;
};

/// Thrown by load_corpus when validation fails; carries every problem found.
class LoadError : public std::runtime_error {
 public:
  explicit LoadError(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

/// Trims surrounding whitespace and collapses inner whitespace runs to one space.
std::string normalize_name(std::string_view name);

struct CorpusPaths {
  std::filesystem::path characters;
  std::filesystem::path aliases;       // optional, may not exist
  std::filesystem::path units;
  std::filesystem::path interactions;
  std::filesystem::path periods;       // optional, may not exist

  /// Standard file names (characters.csv, aliases.csv, ...) inside `dir`.
  static CorpusPaths in_directory(const std::filesystem::path& dir);
};

/// Raw records as read from disk, before validation. `*_lines` hold the
/// 1-based source line of each record (0 for programmatic input).
struct CorpusRecords {
  std::vector<CharacterRecord> characters;
  std::vector<std::pair<std::string, std::string>> aliases;  // alias -> target
  std::vector<NarrativeUnit> units;
  std::vector<InteractionRecord> interactions;
  std::vector<PeriodSpec> periods;

  std::string characters_file = "<characters>";
  std::string aliases_file = "<aliases>";
  std::string units_file = "<units>";
  std::string interactions_file = "<interactions>";
  std::string periods_file = "<periods>";
  std::vector<std::size_t> character_lines, alias_lines, unit_lines, interaction_lines;
  std::map<std::string, std::size_t> period_lines;
};

class Corpus;

/// Validates records and resolves aliases. In lenient mode, names that are
/// neither canonical nor aliases become unnamed characters of unknown sex.
Corpus build_corpus(CorpusRecords records, bool strict);
Corpus load_corpus(const CorpusPaths& paths, bool strict);

/// Validated, alias-resolved collection of adaptations. Immutable after
/// construction apart from block segmentation, which produces a new value.
class Corpus {
 public:
  const std::vector<CharacterRecord>& characters() const { return characters_; }
  const CharacterRecord* find_character(std::string_view canonical_name) const;
  /// Canonical name for a canonical name or alias (after normalization).
  std::optional<std::string> resolve(std::string_view name) const;

  const std::vector<NarrativeUnit>& units() const { return units_; }
  const NarrativeUnit* find_unit(std::string_view id) const;
  /// Units of one medium and kind, in ordinal order.
  std::vector<const NarrativeUnit*> units_of(std::string_view medium, UnitKind kind) const;
  /// The unit itself when kinds match, otherwise its ancestor of `kind`.
  const NarrativeUnit* ancestor(const NarrativeUnit& unit, UnitKind kind) const;
  std::vector<std::string> media() const;
  /// Finest kind among the medium's annotated (non-block) units.
  std::optional<UnitKind> finest_kind(std::string_view medium) const;

  const std::vector<InteractionRecord>& interactions() const { return interactions_; }
  std::vector<const InteractionRecord*> interactions_in(std::string_view unit_id) const;

  const std::vector<PeriodSpec>& periods() const { return periods_; }
  const PeriodSpec& period(std::string_view label) const;
  bool in_period(const NarrativeUnit& unit, const PeriodSpec& period) const;
  /// Finest-kind units of `medium` whose TopLevel ancestor lies in the period.
  std::vector<const NarrativeUnit*> finest_units(std::string_view medium,
                                                 const PeriodSpec& period) const;
  /// Characters involved in at least one interaction of `unit_id`.
  std::set<std::string> cast_of(std::string_view unit_id) const;

 private:
  friend Corpus build_corpus(CorpusRecords records, bool strict);
  friend Corpus segment_blocks(const Corpus& corpus, std::string_view tv_medium,
                               std::vector<std::string>* warnings);
  void reindex();

  std::vector<CharacterRecord> characters_;
  std::unordered_map<std::string, std::size_t> character_index_;
  std::unordered_map<std::string, std::string> alias_to_canonical_;
  std::vector<NarrativeUnit> units_;
  std::unordered_map<std::string, std::size_t> unit_index_;
  std::vector<InteractionRecord> interactions_;
  std::unordered_map<std::string, std::vector<std::size_t>> interactions_by_unit_;
  std::vector<PeriodSpec> periods_;
};

/// Max-normalized occurrence scores per medium and their mean.
struct ImportanceTable {
  struct Entry {
    std::string name;
    std::vector<double> scores;  // one per medium, same order as `media`
    double mean = 0.0;
  };

  std::vector<std::string> media;
  std::string period;
  std::vector<Entry> ranked;  // descending mean, ties by name ascending

  const Entry* find(std::string_view name) const;
};

ImportanceTable compute_importance(const Corpus& corpus, std::span<const std::string> media,
                                   const PeriodSpec& period);

enum class CharacterSet { All, Named, Common, TopK };

std::optional<CharacterSet> parse_character_set(std::string_view text);

/// Character subset selection. All/Named/Common come back sorted by name;
/// TopK in importance rank order. `extra` names are appended when missing
/// (forced inclusion of characters of interest).
std::vector<std::string> select_characters(const Corpus& corpus, CharacterSet set,
                                           std::span<const std::string> media,
                                           const PeriodSpec& period,
                                           const ImportanceTable* importance = nullptr,
                                           std::size_t k = 0,
                                           std::span<const std::string> extra = {});

}  // namespace storynet
