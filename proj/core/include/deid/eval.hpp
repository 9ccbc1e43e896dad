#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deid/corpus.hpp"

namespace deid {

enum class MatchLevel : unsigned char { Strict, Relaxed, Token };
enum class Aggregation : unsigned char { Micro, Macro };
enum class Metric : unsigned char { Precision, Recall, F1 };

std::string_view to_string(MatchLevel level);
std::optional<MatchLevel> parse_match_level(std::string_view name);
std::optional<Aggregation> parse_aggregation(std::string_view name);
std::optional<Metric> parse_metric(std::string_view name);

struct Counts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const Counts&, const Counts&) = default;
};

struct MatchCounts {
  std::array<Counts, kSubcategoryCount> by_subcategory{};

  Counts& operator[](Subcategory s) { return by_subcategory[index_of(s)]; }
  const Counts& operator[](Subcategory s) const { return by_subcategory[index_of(s)]; }
  Counts total() const;
  MatchCounts& operator+=(const MatchCounts& o);
};

/// TP iff identical (start, end, subcategory).
MatchCounts match_strict(std::span<const PhiSpan> gold, std::span<const PhiSpan> sys);
/// TP iff same subcategory and start, and |end difference| <= tolerance
/// characters; greedy one-to-one in document order.
MatchCounts match_relaxed(std::span<const PhiSpan> gold, std::span<const PhiSpan> sys, std::size_t tolerance = 2);
/// Counts tokens: a gold-covered token is TP if a system span of the same
/// subcategory covers it, else FN; a system-covered token without same-type
/// gold is FP. Coverage means character overlap.
MatchCounts match_token(std::span<const PhiSpan> gold, std::span<const PhiSpan> sys, std::span<const Token> tokens);

MatchCounts match(MatchLevel level, std::span<const PhiSpan> gold, std::span<const PhiSpan> sys,
                  std::span<const Token> tokens);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  double get(Metric m) const { return m == Metric::Precision ? precision : m == Metric::Recall ? recall : f1; }
};

/// Zero denominators give zero.
Prf prf(const Counts& c);
/// Micro pools the counts; macro averages per-document P, R and F over the
/// documents that have at least one gold or system span.
Prf aggregate(std::span<const Counts> per_document, Aggregation mode);

class CategorySet {
 public:
  CategorySet() = default;
  CategorySet(std::string name, std::bitset<kSubcategoryCount> members)
      : name_(std::move(name)), members_(members) {}

  static CategorySet i2b2();
  /// The bundled default, which drops PROFESSION, COUNTRY, DOCTOR,
  /// HOSPITAL, ORGANIZATION and STATE.
  static CategorySet hipaa();

  const std::string& name() const { return name_; }
  bool contains(Subcategory s) const { return members_.test(index_of(s)); }
  std::size_t size() const { return members_.count(); }

 private:
  std::string name_;
  std::bitset<kSubcategoryCount> members_;
};

/// `[NAME]` headings followed by one subcategory per line. The i2b2 set (all
/// subcategories) is always present. Names are matched case-insensitively.
std::map<std::string, CategorySet> parse_category_sets(std::string_view text);
/// Throws DataError for an unknown name.
CategorySet find_category_set(const std::map<std::string, CategorySet>& sets, std::string_view name);

std::vector<PhiSpan> filter_category_set(std::span<const PhiSpan> spans, const CategorySet& set);

struct RandomizationResult {
  double d = 0.0;
  std::size_t m = 0;
  std::size_t trials = 0;
  double alpha = 1.0;
  bool significant(double cutoff = 0.1) const { return alpha < cutoff; }
};

/// Approximate randomization over paired per-record scores: trial j swaps
/// each pair with probability 0.5 using stream mix_seed(seed, j) and counts
/// d-hat >= d; alpha = (m + 1) / (M + 1).
RandomizationResult approx_randomization(std::span<const double> a, std::span<const double> b,
                                         std::size_t trials = 9999, std::uint64_t seed = 1);
/// Enumerates all 2^n swap patterns (n <= 30); alpha = (m + 1) / (2^n + 1).
RandomizationResult approx_randomization_exhaustive(std::span<const double> a, std::span<const double> b);

struct SubcategoryRow {
  Subcategory subcategory;
  std::size_t train = 0;
  std::size_t gold = 0;
  std::size_t system = 0;
  std::size_t agree = 0;
  Prf scores;
};

struct EvalReport {
  MatchLevel level = MatchLevel::Strict;
  std::string category_set;
  std::vector<SubcategoryRow> rows;  // subcategories of the set, reporting order
  Counts total;
  Prf micro;
  Prf macro;
  std::vector<Counts> per_document;
};

/// Documents are paired by id; a system document missing for a gold id
/// counts as empty output. Token level needs pre-processed gold documents.
EvalReport evaluate(const Corpus& gold, const Corpus& sys, MatchLevel level, const CategorySet& set,
                    const Corpus* train = nullptr);

/// Table 5-style aligned text.
std::string format_report(const EvalReport& report, bool with_train = false);
/// `subcategory,train,gold,system,agree,p,r,f` rows plus micro and macro rows.
std::string report_csv(const EvalReport& report);

/// Micro P/R/F for both category sets and all three levels.
std::string format_overview(const Corpus& gold, const Corpus& sys, const std::map<std::string, CategorySet>& sets);

/// Per-record metric values, in gold order, for the randomization test.
std::vector<double> per_record_scores(const EvalReport& report, Metric metric);

}  // namespace deid
