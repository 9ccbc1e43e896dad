#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "deid/corpus.hpp"

namespace deid {

/// The five CRF feature groups, in greedy-selection order.
enum class FeatureGroup : unsigned char { Lexical, Letter, DigitPunct, Morphological, Dictionary };
inline constexpr std::size_t kFeatureGroupCount = 5;

std::string_view to_string(FeatureGroup g);
std::optional<FeatureGroup> parse_feature_group(std::string_view name);
std::array<FeatureGroup, kFeatureGroupCount> all_feature_groups();

class GroupMask {
 public:
  static GroupMask all() { return GroupMask(0b11111); }
  static GroupMask none() { return GroupMask(0); }
  /// Comma-separated group names, e.g. "lex,letter".
  static GroupMask parse(std::string_view list);

  bool has(FeatureGroup g) const { return bits_.test(static_cast<std::size_t>(g)); }
  GroupMask with(FeatureGroup g) const;
  GroupMask without(FeatureGroup g) const;
  std::string to_string() const;

  friend bool operator==(const GroupMask&, const GroupMask&) = default;

 private:
  explicit GroupMask(unsigned long bits) : bits_(bits) {}
  std::bitset<kFeatureGroupCount> bits_;
};

enum class GazetteerKind : unsigned char { Profession, City, Country, State };
inline constexpr std::size_t kGazetteerCount = 4;
std::string_view to_string(GazetteerKind k);

class Gazetteers {
 public:
  /// The bundled fixture lists.
  static Gazetteers defaults();
  /// Reads profession.txt, city.txt, country.txt, state.txt from dir. Missing
  /// files leave that list empty.
  static Gazetteers load_dir(const std::filesystem::path& dir);

  void load(GazetteerKind kind, const std::filesystem::path& path);
  void add(GazetteerKind kind, std::string_view entry);
  /// `lowered` must already be lowercase.
  bool contains(GazetteerKind kind, std::string_view lowered) const;
  /// Sorted, for serialization.
  std::vector<std::string> entries(GazetteerKind kind) const;
  std::size_t size(GazetteerKind kind) const { return sets_[static_cast<std::size_t>(kind)].size(); }

 private:
  std::array<std::unordered_set<std::string>, kGazetteerCount> sets_;
};

/// Optional POS / chunk tags per token.
struct TokenAttributes {
  std::string pos;
  std::string chunk;
};

/// Sidecar file: `<doc-id> <token-index> <POS> <CHUNK>` per line.
class AttributeSidecar {
 public:
  static AttributeSidecar load(const std::filesystem::path& path);
  void set(const std::string& doc_id, std::size_t token, TokenAttributes attrs);
  const TokenAttributes* find(const std::string& doc_id, std::size_t token) const;
  bool empty() const { return docs_.empty(); }

 private:
  std::unordered_map<std::string, std::map<std::size_t, TokenAttributes>> docs_;
};

/// Feature strings `<group>:<name>[<offset>]=<value>`.
using FeatureSet = std::vector<std::string>;

// The four letter tests, in order: contains letter, contains capital,
// initial capital, all capitals.
std::array<bool, 4> letter_tests(std::string_view token);
// contains digit, all digits, contains punctuation, letters+digits only,
// digits+punctuation only.
std::array<bool, 5> digit_punct_tests(std::string_view token);
/// A/a/0/p per character.
std::string long_shape(std::string_view token);

/// Bits are the letter tests, most significant first ("1110" for Vincent).
std::string capital_code(std::string_view token);
unsigned capital_bits(std::string_view token);
/// Bits are profession, city, country, state membership.
std::string dict_code(std::string_view token, const Gazetteers& gazetteers);
unsigned dict_bits(std::string_view token, const Gazetteers& gazetteers);

/// Offset-0 features of one token.
FeatureSet token_features(std::string_view token, const Gazetteers& gazetteers,
                          const TokenAttributes* attrs = nullptr, GroupMask groups = GroupMask::all());

/// Features of token t and its +-2 neighbours. Positions outside the
/// sentence contribute a single BOS / EOS sentinel feature.
FeatureSet window_features(std::span<const Token> sentence, std::size_t t, const Gazetteers& gazetteers,
                           std::span<const TokenAttributes* const> attrs = {},
                           GroupMask groups = GroupMask::all());

/// Extracts window features for whole sentences, computing each token's base
/// features once.
class FeatureExtractor {
 public:
  FeatureExtractor(const Gazetteers& gazetteers, GroupMask groups = GroupMask::all(),
                   const AttributeSidecar* sidecar = nullptr)
      : gazetteers_(&gazetteers), groups_(groups), sidecar_(sidecar) {}

  std::vector<FeatureSet> sentence(const Document& doc, const Sentence& s) const;
  GroupMask groups() const { return groups_; }
  const Gazetteers& gazetteers() const { return *gazetteers_; }

 private:
  const Gazetteers* gazetteers_;
  GroupMask groups_;
  const AttributeSidecar* sidecar_;
};

class FeatureIndex {
 public:
  FeatureIndex() = default;
  explicit FeatureIndex(std::size_t cutoff) : cutoff_(cutoff) {}

  std::optional<std::uint32_t> find(const std::string& feature) const;
  std::uint32_t add(const std::string& feature);
  const std::string& name(std::uint32_t id) const { return names_[id]; }
  std::size_t size() const { return names_.size(); }
  std::size_t cutoff() const { return cutoff_; }
  /// Observed frequency of every feature seen while building (indexed or not).
  const std::unordered_map<std::string, std::size_t>& frequencies() const { return frequencies_; }

  /// Ids of the indexed features of a set, in set order; unknown ones skipped.
  std::vector<std::uint32_t> lookup(const FeatureSet& features) const;

 private:
  friend FeatureIndex build_index(const Corpus&, std::size_t, const FeatureExtractor&);
  std::size_t cutoff_ = 1;
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> frequencies_;
};

/// Ids in first-seen order for features occurring at least `cutoff` times.
/// Documents must be pre-processed.
FeatureIndex build_index(const Corpus& corpus, std::size_t cutoff, const FeatureExtractor& extractor);

template <class Group>
struct SelectionResult {
  std::vector<Group> kept;
  /// Score of the empty set, then one entry per candidate tried.
  std::vector<double> trace;
};

/// Adds candidates in order, keeping one only if the score does not drop.
template <class Group>
SelectionResult<Group> greedy_select(const std::vector<Group>& candidates,
                                     const std::function<double(const std::vector<Group>&)>& eval) {
  SelectionResult<Group> result;
  if (candidates.empty()) return result;
  double best = eval(result.kept);
  result.trace.push_back(best);
  for (const auto& g : candidates) {
    auto trial = result.kept;
    trial.push_back(g);
    const double score = eval(trial);
    result.trace.push_back(score);
    if (score >= best) {
      result.kept = std::move(trial);
      best = score;
    }
  }
  return result;
}

}  // namespace deid
