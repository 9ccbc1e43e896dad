#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deid/corpus.hpp"

namespace deid {

enum class ErrorKind : unsigned char {
  Correct,
  Type,
  ExtentShort,
  ExtentLong,
  ExtentShortLong,
  Spurious,
  Missing,
};

inline constexpr std::size_t kErrorKindCount = 7;

std::string_view to_string(ErrorKind kind);

struct ErrorRecord {
  ErrorKind kind = ErrorKind::Correct;
  std::optional<PhiSpan> gold;
  std::optional<PhiSpan> system;
  std::string document;

  friend bool operator==(const ErrorRecord&, const ErrorRecord&) = default;
};

/// One record per system span, plus a MISSING record for every gold span no
/// system span paired with. A system span overlapping several gold spans
/// pairs with the one of largest character overlap, ties to the earlier.
/// Extent kinds: SHORT if inside its partner, LONG if it covers every gold
/// span it overlaps, SHORT_LONG otherwise.
std::vector<ErrorRecord> classify(std::span<const PhiSpan> gold, std::span<const PhiSpan> sys,
                                  std::string_view document = {});
/// Pairs documents by id; system documents without a gold counterpart are
/// ignored.
std::vector<ErrorRecord> classify(const Corpus& gold, const Corpus& sys);

struct ErrorMatrix {
  using Row = std::array<std::size_t, kSubcategoryCount>;

  /// [gold][system]: diagonal CORRECT, off-diagonal TYPE.
  std::array<Row, kSubcategoryCount> cells{};
  // Indexed by system subcategory.
  Row spurious{};
  Row short_{};
  Row long_{};
  Row short_long{};
  // Indexed by gold subcategory. `extent` counts gold spans whose pairings
  // are all extent errors, so gold rows add up.
  Row missing{};
  Row extent{};
  std::array<std::size_t, kErrorKindCount> by_kind{};

  /// Gold spans of a subcategory: its row plus missing plus extent.
  std::size_t gold_total(Subcategory g) const;
  /// System spans of a subcategory: its column plus the four error rows.
  std::size_t system_total(Subcategory s) const;
  std::size_t records() const;
};

ErrorMatrix error_matrix(std::span<const ErrorRecord> records);

/// Aligned text. With `percent`, correct/type/spurious/extent cells are
/// divided by the system column total and missing/extent-gold by the gold
/// row total, rounded to whole percent.
std::string format_error_matrix(const ErrorMatrix& m, bool percent = false);
/// `row,column,count` lines with raw counts.
std::string error_matrix_csv(const ErrorMatrix& m);

struct FrequencySummary {
  Subcategory subcategory = Subcategory::Patient;
  std::size_t surfaces = 0;  // distinct surface strings; 0 means empty
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

/// Linear-interpolation quantile of sorted values, q in [0, 1].
double quantile(std::span<const double> sorted, double q);

/// Per subcategory, the number of documents containing each distinct gold
/// surface string, summarized by five numbers.
std::array<FrequencySummary, kSubcategoryCount> doc_frequency(const Corpus& corpus);
std::string format_doc_frequency(std::span<const FrequencySummary> rows);

}  // namespace deid
