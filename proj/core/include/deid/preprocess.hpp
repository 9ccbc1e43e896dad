#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "deid/corpus.hpp"

namespace deid {

/// Splits text into tokens with character offsets.
///
/// Order of operations:
///   1. split on whitespace;
///   2. inside each chunk, DATE / PHONE / EMAIL pattern matches are kept whole;
///      every other punctuation character becomes its own token;
///   3. the remaining pieces are split at letter|digit, digit|letter+letter,
///      lower|Upper and UPPER-run|Titlecase boundaries.
/// Total function: never throws on valid UTF-8.
std::vector<Token> tokenize(std::string_view text);
std::vector<Token> tokenize(std::u32string_view text);

class AbbreviationList {
 public:
  AbbreviationList() = default;
  explicit AbbreviationList(std::unordered_set<std::string> entries) : entries_(std::move(entries)) {}

  static AbbreviationList defaults();
  /// One entry per line; blank lines and `#` comments skipped.
  static AbbreviationList load(const std::filesystem::path& path);

  /// `lowered` includes the trailing period, e.g. "dr.".
  bool contains(const std::string& lowered) const { return entries_.count(lowered) > 0; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::unordered_set<std::string> entries_;
};

class SentenceSplitter {
 public:
  virtual ~SentenceSplitter() = default;
  /// Assigns sentence_index on every token and returns the partition.
  virtual std::vector<Sentence> split(std::vector<Token>& tokens, std::u32string_view text) const = 0;
};

/// Boundaries at newlines and sentence-final . ? ! tokens, except after an
/// abbreviation or a single capital initial, or when the next token starts
/// lowercase. Sentences longer than max_tokens are cut at the cap.
class RuleSentenceSplitter final : public SentenceSplitter {
 public:
  explicit RuleSentenceSplitter(AbbreviationList abbreviations = AbbreviationList::defaults(),
                                std::size_t max_tokens = 200);

  std::vector<Sentence> split(std::vector<Token>& tokens, std::u32string_view text) const override;

  std::size_t max_tokens() const { return max_tokens_; }

 private:
  bool is_abbreviation_period(const std::vector<Token>& tokens, std::size_t period,
                              std::u32string_view text) const;

  AbbreviationList abbreviations_;
  std::size_t max_tokens_;
};

std::vector<Sentence> split_sentences(std::vector<Token>& tokens, std::string_view text,
                                      const SentenceSplitter& splitter = RuleSentenceSplitter());

/// Fills doc.tokens and doc.sentences.
void preprocess(Document& doc, const SentenceSplitter& splitter = RuleSentenceSplitter());
void preprocess(Corpus& corpus, const SentenceSplitter& splitter = RuleSentenceSplitter());

/// Debug dump: one line per token `<sentence> <start> <end> <text>`.
std::string dump_tokens(const Document& doc);

}  // namespace deid
