#include "deid/features.hpp"

#include <algorithm>
#include <fstream>

#include "deid/common.hpp"
#include "deid/resources.hpp"

namespace deid {
namespace {

constexpr std::array<std::string_view, kFeatureGroupCount> kGroupNames = {"lex", "letter", "digit", "morph", "dict"};
constexpr std::array<std::string_view, kGazetteerCount> kGazetteerNames = {"profession", "city", "country",
                                                                           "state"};

// A base feature before the window offset is attached: "<group>:<name>" and
// the value.
struct BaseFeature {
  std::string key;
  std::string value;
};

std::string bit(bool b) { return b ? "1" : "0"; }

std::vector<BaseFeature> base_features(std::string_view token, const Gazetteers& gaz, const TokenAttributes* attrs,
                                       GroupMask groups) {
  std::vector<BaseFeature> out;
  const std::u32string cps = decode_utf8(token);
  const std::string lower = to_lower_ascii(token);

  if (groups.has(FeatureGroup::Lexical)) {
    out.push_back({"lex:lower", lower});
    out.push_back({"lex:lemma", lower});
    if (attrs != nullptr) {
      out.push_back({"lex:pos", attrs->pos});
      out.push_back({"lex:chunk", attrs->chunk});
    }
    out.push_back({"lex:shape", long_shape(token)});
    out.push_back({"lex:len", std::to_string(cps.size())});
  }
  if (groups.has(FeatureGroup::Letter)) {
    static constexpr std::array<std::string_view, 4> names = {"letter:has_letter", "letter:has_cap",
                                                              "letter:init_cap", "letter:all_caps"};
    const auto tests = letter_tests(token);
    for (std::size_t i = 0; i < 4; ++i) out.push_back({std::string(names[i]), bit(tests[i])});
  }
  if (groups.has(FeatureGroup::DigitPunct)) {
    static constexpr std::array<std::string_view, 5> names = {"digit:has_digit", "digit:all_digits",
                                                              "digit:has_punct", "digit:alnum",
                                                              "digit:digit_punct"};
    const auto tests = digit_punct_tests(token);
    for (std::size_t i = 0; i < 5; ++i) out.push_back({std::string(names[i]), bit(tests[i])});
  }
  if (groups.has(FeatureGroup::Morphological)) {
    for (std::size_t n = 2; n <= 4; ++n) {
      if (cps.size() < n) break;
      out.push_back({"morph:pre" + std::to_string(n), encode_utf8(std::u32string_view(cps).substr(0, n))});
      out.push_back({"morph:suf" + std::to_string(n), encode_utf8(std::u32string_view(cps).substr(cps.size() - n))});
    }
  }
  if (groups.has(FeatureGroup::Dictionary)) {
    for (std::size_t k = 0; k < kGazetteerCount; ++k) {
      out.push_back({"dict:" + std::string(kGazetteerNames[k]),
                     bit(gaz.contains(static_cast<GazetteerKind>(k), lower))});
    }
  }
  return out;
}

std::string offset_tag(int offset) {
  if (offset > 0) return "[+" + std::to_string(offset) + "]";
  return "[" + std::to_string(offset) + "]";
}

void append_window(FeatureSet& out, const std::vector<BaseFeature>& base, int offset) {
  const std::string tag = offset_tag(offset);
  for (const auto& f : base) out.push_back(f.key + tag + "=" + f.value);
}

void append_sentinel(FeatureSet& out, int offset) {
  out.push_back("lex:lower" + offset_tag(offset) + (offset < 0 ? "=BOS" : "=EOS"));
}

}  // namespace

std::string_view to_string(FeatureGroup g) { return kGroupNames[static_cast<std::size_t>(g)]; }

std::optional<FeatureGroup> parse_feature_group(std::string_view name) {
  for (std::size_t i = 0; i < kFeatureGroupCount; ++i) {
    if (kGroupNames[i] == name) return static_cast<FeatureGroup>(i);
  }
  return std::nullopt;
}

std::array<FeatureGroup, kFeatureGroupCount> all_feature_groups() {
  return {FeatureGroup::Lexical, FeatureGroup::Letter, FeatureGroup::DigitPunct, FeatureGroup::Morphological,
          FeatureGroup::Dictionary};
}

GroupMask GroupMask::parse(std::string_view list) {
  GroupMask mask = none();
  std::size_t i = 0;
  while (i <= list.size()) {
    const auto comma = std::min(list.find(',', i), list.size());
    const auto name = trim(list.substr(i, comma - i));
    if (!name.empty()) {
      const auto g = parse_feature_group(name);
      if (!g) throw DataError("unknown feature group '" + std::string(name) + "'");
      mask = mask.with(*g);
    }
    i = comma + 1;
  }
  return mask;
}

GroupMask GroupMask::with(FeatureGroup g) const {
  GroupMask m = *this;
  m.bits_.set(static_cast<std::size_t>(g));
  return m;
}

GroupMask GroupMask::without(FeatureGroup g) const {
  GroupMask m = *this;
  m.bits_.reset(static_cast<std::size_t>(g));
  return m;
}

std::string GroupMask::to_string() const {
  std::string out;
  for (auto g : all_feature_groups()) {
    if (!has(g)) continue;
    if (!out.empty()) out += ',';
    out += deid::to_string(g);
  }
  return out.empty() ? "none" : out;
}

std::string_view to_string(GazetteerKind k) { return kGazetteerNames[static_cast<std::size_t>(k)]; }

Gazetteers Gazetteers::defaults() {
  Gazetteers g;
  auto fill = [&](GazetteerKind kind, std::span<const std::string_view> list) {
    for (auto e : list) g.add(kind, e);
  };
  fill(GazetteerKind::Profession, resources::profession_gazetteer());
  fill(GazetteerKind::City, resources::city_gazetteer());
  fill(GazetteerKind::Country, resources::country_gazetteer());
  fill(GazetteerKind::State, resources::state_gazetteer());
  return g;
}

Gazetteers Gazetteers::load_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("gazetteer directory not found: " + dir.string());
  Gazetteers g;
  for (std::size_t k = 0; k < kGazetteerCount; ++k) {
    const auto path = dir / (std::string(kGazetteerNames[k]) + ".txt");
    if (std::filesystem::exists(path)) g.load(static_cast<GazetteerKind>(k), path);
  }
  return g;
}

void Gazetteers::load(GazetteerKind kind, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read gazetteer " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    const auto entry = trim(line);
    if (entry.empty() || entry.front() == '#') continue;
    add(kind, entry);
  }
}

void Gazetteers::add(GazetteerKind kind, std::string_view entry) {
  sets_[static_cast<std::size_t>(kind)].insert(to_lower_ascii(entry));
}

bool Gazetteers::contains(GazetteerKind kind, std::string_view lowered) const {
  const auto& s = sets_[static_cast<std::size_t>(kind)];
  return s.find(std::string(lowered)) != s.end();
}

std::vector<std::string> Gazetteers::entries(GazetteerKind kind) const {
  const auto& s = sets_[static_cast<std::size_t>(kind)];
  std::vector<std::string> out(s.begin(), s.end());
  std::sort(out.begin(), out.end());
  return out;
}

AttributeSidecar AttributeSidecar::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read sidecar " + path.string());
  AttributeSidecar out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_ws(line);
    if (f.size() != 4) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected <doc-id> <token> <POS> <CHUNK>");
    }
    std::size_t index = 0;
    try {
      index = std::stoul(f[1]);
    } catch (const std::exception&) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": bad token index '" + f[1] + "'");
    }
    out.set(f[0], index, {f[2], f[3]});
  }
  return out;
}

void AttributeSidecar::set(const std::string& doc_id, std::size_t token, TokenAttributes attrs) {
  docs_[doc_id][token] = std::move(attrs);
}

const TokenAttributes* AttributeSidecar::find(const std::string& doc_id, std::size_t token) const {
  const auto d = docs_.find(doc_id);
  if (d == docs_.end()) return nullptr;
  const auto t = d->second.find(token);
  return t == d->second.end() ? nullptr : &t->second;
}

std::array<bool, 4> letter_tests(std::string_view token) {
  const auto cps = decode_utf8(token);
  bool letter = false;
  bool capital = false;
  bool all_caps = !cps.empty();
  for (char32_t c : cps) {
    letter = letter || is_ascii_letter(c);
    capital = capital || is_ascii_upper(c);
    all_caps = all_caps && is_ascii_upper(c);
  }
  const bool initial = !cps.empty() && is_ascii_upper(cps.front());
  return {letter, capital, initial, all_caps};
}

std::array<bool, 5> digit_punct_tests(std::string_view token) {
  const auto cps = decode_utf8(token);
  std::size_t digits = 0;
  std::size_t letters = 0;
  std::size_t puncts = 0;
  for (char32_t c : cps) {
    if (is_ascii_digit(c)) {
      ++digits;
    } else if (is_ascii_letter(c)) {
      ++letters;
    } else if (is_punct(c)) {
      ++puncts;
    }
  }
  const std::size_t n = cps.size();
  return {digits > 0, n > 0 && digits == n, puncts > 0, letters > 0 && digits > 0 && letters + digits == n,
          digits > 0 && puncts > 0 && digits + puncts == n};
}

std::string long_shape(std::string_view token) {
  std::string out;
  for (char32_t c : decode_utf8(token)) {
    if (is_ascii_upper(c)) {
      out += 'A';
    } else if (is_ascii_lower(c)) {
      out += 'a';
    } else if (is_ascii_digit(c)) {
      out += '0';
    } else {
      out += 'p';
    }
  }
  return out;
}

unsigned capital_bits(std::string_view token) {
  const auto t = letter_tests(token);
  return (t[0] ? 8u : 0u) | (t[1] ? 4u : 0u) | (t[2] ? 2u : 0u) | (t[3] ? 1u : 0u);
}

std::string capital_code(std::string_view token) {
  std::string out;
  for (bool b : letter_tests(token)) out += b ? '1' : '0';
  return out;
}

unsigned dict_bits(std::string_view token, const Gazetteers& gazetteers) {
  const std::string lower = to_lower_ascii(token);
  unsigned bits = 0;
  for (std::size_t k = 0; k < kGazetteerCount; ++k) {
    bits = (bits << 1) | (gazetteers.contains(static_cast<GazetteerKind>(k), lower) ? 1u : 0u);
  }
  return bits;
}

std::string dict_code(std::string_view token, const Gazetteers& gazetteers) {
  const unsigned bits = dict_bits(token, gazetteers);
  std::string out;
  for (int k = 3; k >= 0; --k) out += (bits >> k) & 1u ? '1' : '0';
  return out;
}

FeatureSet token_features(std::string_view token, const Gazetteers& gazetteers, const TokenAttributes* attrs,
                          GroupMask groups) {
  FeatureSet out;
  append_window(out, base_features(token, gazetteers, attrs, groups), 0);
  return out;
}

FeatureSet window_features(std::span<const Token> sentence, std::size_t t, const Gazetteers& gazetteers,
                           std::span<const TokenAttributes* const> attrs, GroupMask groups) {
  FeatureSet out;
  for (int off = -2; off <= 2; ++off) {
    const auto pos = static_cast<long long>(t) + off;
    if (pos < 0 || pos >= static_cast<long long>(sentence.size())) {
      append_sentinel(out, off);
      continue;
    }
    const auto p = static_cast<std::size_t>(pos);
    const TokenAttributes* a = p < attrs.size() ? attrs[p] : nullptr;
    append_window(out, base_features(sentence[p].text, gazetteers, a, groups), off);
  }
  return out;
}

std::vector<FeatureSet> FeatureExtractor::sentence(const Document& doc, const Sentence& s) const {
  const std::size_t n = s.size();
  std::vector<std::vector<BaseFeature>> base(n);
  for (std::size_t i = 0; i < n; ++i) {
    const TokenAttributes* a = sidecar_ != nullptr ? sidecar_->find(doc.id, s.first + i) : nullptr;
    base[i] = base_features(doc.tokens[s.first + i].text, *gazetteers_, a, groups_);
  }
  std::vector<FeatureSet> out(n);
  for (std::size_t t = 0; t < n; ++t) {
    for (int off = -2; off <= 2; ++off) {
      const auto pos = static_cast<long long>(t) + off;
      if (pos < 0 || pos >= static_cast<long long>(n)) {
        append_sentinel(out[t], off);
      } else {
        append_window(out[t], base[static_cast<std::size_t>(pos)], off);
      }
    }
  }
  return out;
}

std::optional<std::uint32_t> FeatureIndex::find(const std::string& feature) const {
  const auto it = ids_.find(feature);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::uint32_t FeatureIndex::add(const std::string& feature) {
  const auto [it, inserted] = ids_.emplace(feature, static_cast<std::uint32_t>(names_.size()));
  if (inserted) names_.push_back(feature);
  return it->second;
}

std::vector<std::uint32_t> FeatureIndex::lookup(const FeatureSet& features) const {
  std::vector<std::uint32_t> out;
  out.reserve(features.size());
  for (const auto& f : features) {
    const auto it = ids_.find(f);
    if (it != ids_.end()) out.push_back(it->second);
  }
  return out;
}

FeatureIndex build_index(const Corpus& corpus, std::size_t cutoff, const FeatureExtractor& extractor) {
  FeatureIndex index(cutoff);
  std::vector<std::string> order;
  for (const auto& doc : corpus) {
    if (!doc.preprocessed()) throw DataError("document " + doc.id + " is not pre-processed");
    for (const auto& s : doc.sentences) {
      for (auto& set : extractor.sentence(doc, s)) {
        for (auto& f : set) {
          auto [it, inserted] = index.frequencies_.try_emplace(f, 0);
          if (inserted) order.push_back(f);
          ++it->second;
        }
      }
    }
  }
  for (const auto& f : order) {
    if (index.frequencies_.at(f) >= cutoff) index.add(f);
  }
  return index;
}

}  // namespace deid
