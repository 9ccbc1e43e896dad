#include "deid/preprocess.hpp"

#include <algorithm>
#include <fstream>

#include "deid/common.hpp"
#include "deid/resources.hpp"

namespace deid {
namespace {

bool is_word_char(char32_t c) { return is_ascii_letter(c) || is_ascii_digit(c) || c == U'_'; }

std::size_t digit_run(std::u32string_view s, std::size_t i) {
  std::size_t j = i;
  while (j < s.size() && is_ascii_digit(s[j])) ++j;
  return j - i;
}

bool digit_at(std::u32string_view s, std::size_t i) { return i < s.size() && is_ascii_digit(s[i]); }

// \d{1,2}([/-])(\d{1,2}\1)?\d{2,4}, with no digit directly before or after the
// match. Returns the match length or 0.
std::size_t match_date(std::u32string_view s, std::size_t i) {
  if (i > 0 && is_ascii_digit(s[i - 1])) return 0;
  const std::size_t d1 = digit_run(s, i);
  if (d1 < 1 || d1 > 2) return 0;
  std::size_t p = i + d1;
  if (p >= s.size() || (s[p] != U'/' && s[p] != U'-')) return 0;
  const char32_t sep = s[p++];
  // With the optional middle group first (greedy), then without it.
  const std::size_t d2 = digit_run(s, p);
  if (d2 >= 1 && d2 <= 2 && p + d2 < s.size() && s[p + d2] == sep) {
    const std::size_t q = p + d2 + 1;
    const std::size_t d3 = digit_run(s, q);
    if (d3 >= 2 && d3 <= 4) return q + d3 - i;
  }
  if (d2 >= 2 && d2 <= 4) return p + d2 - i;
  return 0;
}

// \D\d{3}\D{0,2}\d{3}\D{0,2}\d{4}; the leading \D is treated as a
// non-digit-or-start guard and is not part of the match. No digit may follow.
std::size_t match_phone(std::u32string_view s, std::size_t i) {
  if (i > 0 && is_ascii_digit(s[i - 1])) return 0;
  auto digits = [&](std::size_t p, std::size_t n) {
    if (p + n > s.size()) return false;
    for (std::size_t k = 0; k < n; ++k) {
      if (!is_ascii_digit(s[p + k])) return false;
    }
    return true;
  };
  auto nondigits = [&](std::size_t p, std::size_t n) {
    if (p + n > s.size()) return false;
    for (std::size_t k = 0; k < n; ++k) {
      if (is_ascii_digit(s[p + k])) return false;
    }
    return true;
  };
  if (!digits(i, 3)) return 0;
  for (int g1 = 2; g1 >= 0; --g1) {
    const std::size_t p1 = i + 3;
    if (!nondigits(p1, g1) || !digits(p1 + g1, 3)) continue;
    for (int g2 = 2; g2 >= 0; --g2) {
      const std::size_t p2 = p1 + g1 + 3;
      if (!nondigits(p2, g2) || !digits(p2 + g2, 4)) continue;
      const std::size_t end = p2 + g2 + 4;
      if (digit_at(s, end)) continue;
      return end - i;
    }
  }
  return 0;
}

// \w+@\w+\.[a-z]+
std::size_t match_email(std::u32string_view s, std::size_t i) {
  std::size_t p = i;
  while (p < s.size() && is_word_char(s[p])) ++p;
  if (p == i || p >= s.size() || s[p] != U'@') return 0;
  const std::size_t host = ++p;
  while (p < s.size() && is_word_char(s[p])) ++p;
  if (p == host || p >= s.size() || s[p] != U'.') return 0;
  const std::size_t tld = ++p;
  while (p < s.size() && is_ascii_lower(s[p])) ++p;
  if (p == tld) return 0;
  return p - i;
}

std::size_t match_protected(std::u32string_view s, std::size_t i) {
  return std::max({match_date(s, i), match_phone(s, i), match_email(s, i)});
}

// Split point before position i (0 < i < s.size()) of a punctuation-free piece.
bool boundary_before(std::u32string_view s, std::size_t i) {
  const char32_t a = s[i - 1];
  const char32_t b = s[i];
  if (is_ascii_letter(a) && is_ascii_digit(b)) return true;
  if (is_ascii_digit(a) && is_ascii_letter(b) && i + 1 < s.size() && is_ascii_letter(s[i + 1])) return true;
  if (is_ascii_lower(a) && is_ascii_upper(b)) return true;
  // [A-Z]{3,}[a-z]{2,}: split before the last capital of the run.
  if (is_ascii_upper(b) && is_ascii_upper(a) && i >= 2 && is_ascii_upper(s[i - 2]) && i + 2 < s.size() &&
      is_ascii_lower(s[i + 1]) && is_ascii_lower(s[i + 2])) {
    return true;
  }
  return false;
}

void emit(std::vector<Token>& out, std::u32string_view text, std::size_t start, std::size_t end) {
  Token t;
  t.start = start;
  t.end = end;
  t.text = encode_utf8(text.substr(start, end - start));
  out.push_back(std::move(t));
}

void split_piece(std::vector<Token>& out, std::u32string_view text, std::size_t start, std::size_t end) {
  const auto piece = text.substr(start, end - start);
  std::size_t from = 0;
  for (std::size_t i = 1; i < piece.size(); ++i) {
    if (boundary_before(piece, i)) {
      emit(out, text, start + from, start + i);
      from = i;
    }
  }
  if (from < piece.size()) emit(out, text, start + from, end);
}

void split_unprotected(std::vector<Token>& out, std::u32string_view text, std::size_t start, std::size_t end) {
  std::size_t i = start;
  while (i < end) {
    if (is_punct(text[i])) {
      emit(out, text, i, i + 1);
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < end && !is_punct(text[j])) ++j;
    split_piece(out, text, i, j);
    i = j;
  }
}

void tokenize_chunk(std::vector<Token>& out, std::u32string_view text, std::size_t start, std::size_t end) {
  const auto chunk = text.substr(start, end - start);
  std::size_t pending = 0;
  std::size_t i = 0;
  while (i < chunk.size()) {
    const std::size_t len = match_protected(chunk, i);
    if (len > 0) {
      split_unprotected(out, text, start + pending, start + i);
      emit(out, text, start + i, start + i + len);
      i += len;
      pending = i;
    } else {
      ++i;
    }
  }
  split_unprotected(out, text, start + pending, end);
}

}  // namespace

std::vector<Token> tokenize(std::u32string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) tokenize_chunk(out, text, i, j);
    i = j;
  }
  return out;
}

std::vector<Token> tokenize(std::string_view text) { return tokenize(std::u32string_view(decode_utf8(text))); }

AbbreviationList AbbreviationList::defaults() {
  std::unordered_set<std::string> entries;
  for (auto e : resources::abbreviations()) entries.emplace(e);
  return AbbreviationList(std::move(entries));
}

AbbreviationList AbbreviationList::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open abbreviation list " + path.string());
  std::unordered_set<std::string> entries;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    entries.insert(to_lower_ascii(t));
  }
  return AbbreviationList(std::move(entries));
}

RuleSentenceSplitter::RuleSentenceSplitter(AbbreviationList abbreviations, std::size_t max_tokens)
    : abbreviations_(std::move(abbreviations)), max_tokens_(max_tokens == 0 ? 1 : max_tokens) {}

bool RuleSentenceSplitter::is_abbreviation_period(const std::vector<Token>& tokens, std::size_t period,
                                                  std::u32string_view text) const {
  if (period == 0) return false;
  const Token& prev = tokens[period - 1];
  if (prev.end != tokens[period].start) return false;
  // Single capital initial: "J. Smith".
  const auto prev_chars = text.substr(prev.start, prev.end - prev.start);
  if (prev_chars.size() == 1 && is_ascii_upper(prev_chars[0])) return true;
  // Grow the candidate leftwards over adjacent tokens: "dr." then "e.g.".
  std::string candidate = ".";
  std::size_t k = period;
  while (k > 0 && tokens[k - 1].end == tokens[k].start) {
    --k;
    candidate = to_lower_ascii(tokens[k].text) + candidate;
    if (abbreviations_.contains(candidate)) return true;
    if (period - k >= 4) break;
  }
  return false;
}

std::vector<Sentence> RuleSentenceSplitter::split(std::vector<Token>& tokens, std::u32string_view text) const {
  std::vector<Sentence> sentences;
  if (tokens.empty()) return sentences;

  auto close = [&](std::size_t first, std::size_t last) {
    Sentence s;
    s.first = first;
    s.last = last;
    s.start = tokens[first].start;
    s.end = tokens[last].end;
    for (std::size_t k = first; k <= last; ++k) tokens[k].sentence_index = sentences.size();
    sentences.push_back(s);
  };

  std::size_t first = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    bool boundary = false;
    if (i + 1 == tokens.size()) {
      boundary = true;
    } else if (i + 1 - first >= max_tokens_) {
      boundary = true;
    } else {
      const auto gap = text.substr(tokens[i].end, tokens[i + 1].start - tokens[i].end);
      if (gap.find(U'\n') != std::u32string_view::npos) {
        boundary = true;
      } else if (tokens[i].text == "." || tokens[i].text == "?" || tokens[i].text == "!") {
        const char32_t next = text[tokens[i + 1].start];
        const bool next_lower = is_ascii_lower(next);
        const bool abbrev = tokens[i].text == "." && is_abbreviation_period(tokens, i, text);
        boundary = !next_lower && !abbrev;
      }
    }
    if (boundary) {
      close(first, i);
      first = i + 1;
    }
  }
  return sentences;
}

std::vector<Sentence> split_sentences(std::vector<Token>& tokens, std::string_view text,
                                      const SentenceSplitter& splitter) {
  const auto chars = decode_utf8(text);
  return splitter.split(tokens, chars);
}

void preprocess(Document& doc, const SentenceSplitter& splitter) {
  const auto chars = decode_utf8(doc.text);
  doc.tokens = tokenize(std::u32string_view(chars));
  doc.sentences = splitter.split(doc.tokens, chars);
}

void preprocess(Corpus& corpus, const SentenceSplitter& splitter) {
  for (auto& doc : corpus) preprocess(doc, splitter);
}

std::string dump_tokens(const Document& doc) {
  std::string out = "ID " + doc.id + "\n";
  for (const auto& t : doc.tokens) {
    out += std::to_string(t.sentence_index) + " " + std::to_string(t.start) + " " + std::to_string(t.end) + " " +
           t.text + "\n";
  }
  return out;
}

}  // namespace deid
