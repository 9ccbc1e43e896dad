#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "deid/taxonomy.hpp"

namespace deid {

/// Stand-off PHI annotation over character offsets [start, end).
struct PhiSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  Subcategory subcategory = Subcategory::Patient;

  Category category() const { return category_of(subcategory); }
  bool overlaps(const PhiSpan& o) const { return start < o.end && o.start < end; }

  friend bool operator==(const PhiSpan&, const PhiSpan&) = default;
  friend auto operator<=>(const PhiSpan&, const PhiSpan&) = default;
};

struct Token {
  std::string text;  // UTF-8
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t sentence_index = 0;

  friend bool operator==(const Token&, const Token&) = default;
};

/// Inclusive token range [first, last] plus its character span.
struct Sentence {
  std::size_t first = 0;
  std::size_t last = 0;
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const { return last - first + 1; }
  friend bool operator==(const Sentence&, const Sentence&) = default;
};

struct Document {
  std::string id;
  std::string text;  // UTF-8
  std::vector<PhiSpan> gold;
  std::vector<Token> tokens;
  std::vector<Sentence> sentences;

  /// Length of text in Unicode scalar values.
  std::size_t char_length() const;
  /// Text of [start, end) in character offsets.
  std::string slice(std::size_t start, std::size_t end) const;
  bool preprocessed() const { return !tokens.empty() || text.empty(); }
};

using Corpus = std::vector<Document>;

/// Which span keyword a record file is read for: gold (`SPAN`) or system
/// output (`SYS`). Lines with the other keyword are ignored.
enum class SpanKind { Gold, System };

/// Parses the stand-off record format:
///   [# key=value]*            optional header comments
///   ID <id>
///   TEXT <byte-length>
///   <exactly byte-length bytes>\n
///   (SPAN|SYS) <start> <end> <CATEGORY> <SUBCATEGORY>   (sorted by start)
Document parse_record(std::string_view contents, SpanKind kind = SpanKind::Gold,
                      std::string_view origin = "<memory>");
Document load_record(const std::filesystem::path& path, SpanKind kind = SpanKind::Gold);

/// Canonical serialization; parse_record(serialize_record(d)) == d for
/// validated documents and the bytes round-trip exactly.
std::string serialize_record(const Document& doc, SpanKind kind = SpanKind::Gold,
                             const std::vector<std::pair<std::string, std::string>>& header = {});
void save_record(const std::filesystem::path& path, const Document& doc, SpanKind kind = SpanKind::Gold,
                 const std::vector<std::pair<std::string, std::string>>& header = {});

/// Sorts spans by start and checks bounds and overlap. Throws SpanBoundsError
/// or OverlapError.
void validate_spans(std::vector<PhiSpan>& spans, std::size_t text_length, std::string_view origin);

/// Loads every `*.rec` file of a directory, ordered by file name.
Corpus load_corpus(const std::filesystem::path& dir, SpanKind kind = SpanKind::Gold);
void save_corpus(const std::filesystem::path& dir, const Corpus& corpus, SpanKind kind = SpanKind::Gold,
                 const std::vector<std::pair<std::string, std::string>>& header = {});

struct CorpusStats {
  std::size_t note_count = 0;
  std::size_t token_count = 0;
  std::size_t phi_count = 0;
  std::size_t unique_phi_count = 0;
  std::size_t vocabulary_size = 0;

  friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

/// Requires every document to be pre-processed (DataError otherwise).
CorpusStats corpus_stats(const Corpus& corpus);
/// One-row table in the #Notes/#Tokens/#PHI/#Unique PHI/#Vocabulary layout.
std::string format_stats(const CorpusStats& stats, std::string_view label);

struct SynthConfig {
  std::size_t document_count = 0;
  std::uint64_t seed = 1;
  /// Relative frequency weight per subcategory; zero disables templates that
  /// need it.
  std::map<Subcategory, double> weights = default_weights();
  std::string template_set = "default";
  /// Probability that a slot filler is glued to the following word the way
  /// the tokenizer pathologies expect ("09/14/2067CPT").
  double glue_rate = 0.15;
  std::size_t min_sentences = 6;
  std::size_t max_sentences = 12;

  static std::map<Subcategory, double> default_weights();
};

/// Deterministic synthetic corpus. Throws DataError for an unknown template
/// set.
Corpus generate_synthetic(const SynthConfig& config);

}  // namespace deid
