#include "deid/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <set>
#include <unordered_set>

#include "deid/common.hpp"

namespace deid {
namespace fs = std::filesystem;

std::size_t Document::char_length() const { return decode_utf8(text).size(); }

std::string Document::slice(std::size_t start, std::size_t end) const {
  const auto chars = decode_utf8(text);
  if (start > end || end > chars.size()) throw SpanBoundsError("slice out of range in " + id);
  return encode_utf8(std::u32string_view(chars).substr(start, end - start));
}

namespace {

std::size_t parse_size(std::string_view s, std::string_view origin, std::string_view what) {
  std::size_t v = 0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || s.empty()) {
    throw ParseError(std::string(origin) + ": bad " + std::string(what) + " '" + std::string(s) + "'");
  }
  return v;
}

// Reads one line starting at pos (without the terminator); advances pos past
// the newline.
std::string_view next_line(std::string_view s, std::size_t& pos) {
  const std::size_t nl = s.find('\n', pos);
  std::string_view line;
  if (nl == std::string_view::npos) {
    line = s.substr(pos);
    pos = s.size();
  } else {
    line = s.substr(pos, nl - pos);
    pos = nl + 1;
  }
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace

void validate_spans(std::vector<PhiSpan>& spans, std::size_t text_length, std::string_view origin) {
  std::stable_sort(spans.begin(), spans.end(),
                   [](const PhiSpan& a, const PhiSpan& b) { return a.start < b.start; });
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto& s = spans[i];
    if (s.start >= s.end || s.end > text_length) {
      throw SpanBoundsError(std::string(origin) + ": span (" + std::to_string(s.start) + "," +
                            std::to_string(s.end) + ") outside text of length " + std::to_string(text_length));
    }
    if (i > 0 && spans[i - 1].end > s.start) {
      throw OverlapError(std::string(origin) + ": spans (" + std::to_string(spans[i - 1].start) + "," +
                         std::to_string(spans[i - 1].end) + ") and (" + std::to_string(s.start) + "," +
                         std::to_string(s.end) + ") overlap");
    }
  }
}

Document parse_record(std::string_view s, SpanKind kind, std::string_view origin) {
  Document doc;
  std::size_t pos = 0;
  std::string_view line = next_line(s, pos);
  while (!line.empty() && line.front() == '#' && pos < s.size()) line = next_line(s, pos);

  if (line.substr(0, 3) != "ID ") throw ParseError(std::string(origin) + ": expected 'ID <id>' line");
  doc.id = std::string(trim(line.substr(3)));
  if (doc.id.empty()) throw ParseError(std::string(origin) + ": empty record id");

  line = next_line(s, pos);
  if (line.substr(0, 5) != "TEXT ") throw ParseError(std::string(origin) + ": expected 'TEXT <bytes>' line");
  const std::size_t nbytes = parse_size(trim(line.substr(5)), origin, "text length");
  if (pos + nbytes > s.size()) throw ParseError(std::string(origin) + ": text shorter than declared length");
  doc.text = std::string(s.substr(pos, nbytes));
  pos += nbytes;
  if (pos < s.size()) {
    if (s[pos] != '\n') throw ParseError(std::string(origin) + ": missing newline after text block");
    ++pos;
  }
  const std::size_t text_length = decode_utf8(doc.text).size();

  const std::string_view wanted = kind == SpanKind::Gold ? "SPAN" : "SYS";
  while (pos < s.size()) {
    line = next_line(s, pos);
    if (trim(line).empty() || line.front() == '#') continue;
    const auto fields = split_ws(line);
    if (fields.size() != 5 || (fields[0] != "SPAN" && fields[0] != "SYS")) {
      throw ParseError(std::string(origin) + ": malformed span line '" + std::string(line) + "'");
    }
    if (fields[0] != wanted) continue;
    PhiSpan span;
    span.start = parse_size(fields[1], origin, "span start");
    span.end = parse_size(fields[2], origin, "span end");
    const auto cat = parse_category(fields[3]);
    const auto sub = parse_subcategory(fields[4]);
    if (!cat || !sub) throw ParseError(std::string(origin) + ": unknown category in '" + std::string(line) + "'");
    if (category_of(*sub) != *cat) {
      throw ParseError(std::string(origin) + ": subcategory " + fields[4] + " does not belong to " + fields[3]);
    }
    span.subcategory = *sub;
    doc.gold.push_back(span);
  }
  validate_spans(doc.gold, text_length, origin);
  return doc;
}

Document load_record(const fs::path& path, SpanKind kind) {
  return parse_record(read_file(path.string()), kind, path.string());
}

std::string serialize_record(const Document& doc, SpanKind kind,
                             const std::vector<std::pair<std::string, std::string>>& header) {
  std::string out;
  for (const auto& [k, v] : header) out += "# " + k + "=" + v + "\n";
  out += "ID " + doc.id + "\n";
  out += "TEXT " + std::to_string(doc.text.size()) + "\n";
  out += doc.text;
  out += "\n";
  const char* keyword = kind == SpanKind::Gold ? "SPAN" : "SYS";
  for (const auto& span : doc.gold) {
    out += keyword;
    out += " " + std::to_string(span.start) + " " + std::to_string(span.end) + " ";
    out += to_string(span.category());
    out += " ";
    out += to_string(span.subcategory);
    out += "\n";
  }
  return out;
}

void save_record(const fs::path& path, const Document& doc, SpanKind kind,
                 const std::vector<std::pair<std::string, std::string>>& header) {
  write_file(path.string(), serialize_record(doc, kind, header));
}

Corpus load_corpus(const fs::path& dir, SpanKind kind) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".rec") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  Corpus corpus;
  corpus.reserve(files.size());
  for (const auto& f : files) corpus.push_back(load_record(f, kind));
  return corpus;
}

void save_corpus(const fs::path& dir, const Corpus& corpus, SpanKind kind,
                 const std::vector<std::pair<std::string, std::string>>& header) {
  fs::create_directories(dir);
  for (const auto& doc : corpus) save_record(dir / (doc.id + ".rec"), doc, kind, header);
}

CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats stats;
  std::set<std::string> surfaces;
  std::unordered_set<std::string> vocab;
  for (const auto& doc : corpus) {
    if (!doc.preprocessed()) throw DataError("corpus_stats: document " + doc.id + " is not pre-processed");
    ++stats.note_count;
    stats.token_count += doc.tokens.size();
    for (const auto& tok : doc.tokens) vocab.insert(to_lower_ascii(tok.text));
    if (!doc.gold.empty()) {
      const auto chars = decode_utf8(doc.text);
      for (const auto& span : doc.gold) {
        ++stats.phi_count;
        surfaces.insert(encode_utf8(std::u32string_view(chars).substr(span.start, span.end - span.start)));
      }
    }
  }
  stats.unique_phi_count = surfaces.size();
  stats.vocabulary_size = vocab.size();
  return stats;
}

std::string format_stats(const CorpusStats& stats, std::string_view label) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-8s %8s %10s %8s %12s %12s\n%-8.8s %8zu %10zu %8zu %12zu %12zu\n", "", "#Notes",
                "#Tokens", "#PHI", "#Unique PHI", "#Vocabulary", std::string(label).c_str(), stats.note_count,
                stats.token_count, stats.phi_count, stats.unique_phi_count, stats.vocabulary_size);
  return buf;
}

}  // namespace deid
