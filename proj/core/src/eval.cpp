#include "deid/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <unordered_map>

#include "deid/common.hpp"
#include "deid/preprocess.hpp"
#include "deid/random.hpp"
#include "deid/resources.hpp"

namespace deid {
namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  return out;
}

double diff_sum(std::span<const double> a, std::span<const double> b, std::uint64_t swap_bits_unused = 0) {
  (void)swap_bits_unused;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] - b[i];
  return std::abs(s);
}

// d-hat >= d, allowing for rounding in the re-summed differences.
bool at_least(double d_hat, double d) { return d_hat >= d - 1e-12 * std::max(1.0, d); }

}  // namespace

std::string_view to_string(MatchLevel level) {
  switch (level) {
    case MatchLevel::Strict:
      return "strict";
    case MatchLevel::Relaxed:
      return "relaxed";
    case MatchLevel::Token:
      return "token";
  }
  return "?";
}

std::optional<MatchLevel> parse_match_level(std::string_view name) {
  if (name == "strict") return MatchLevel::Strict;
  if (name == "relaxed") return MatchLevel::Relaxed;
  if (name == "token") return MatchLevel::Token;
  return std::nullopt;
}

std::optional<Aggregation> parse_aggregation(std::string_view name) {
  if (name == "micro") return Aggregation::Micro;
  if (name == "macro") return Aggregation::Macro;
  return std::nullopt;
}

std::optional<Metric> parse_metric(std::string_view name) {
  if (name == "p") return Metric::Precision;
  if (name == "r") return Metric::Recall;
  if (name == "f") return Metric::F1;
  return std::nullopt;
}

Counts MatchCounts::total() const {
  Counts c;
  for (const auto& x : by_subcategory) c += x;
  return c;
}

MatchCounts& MatchCounts::operator+=(const MatchCounts& o) {
  for (std::size_t i = 0; i < kSubcategoryCount; ++i) by_subcategory[i] += o.by_subcategory[i];
  return *this;
}

MatchCounts match_strict(std::span<const PhiSpan> gold, std::span<const PhiSpan> sys) {
  MatchCounts out;
  std::multiset<PhiSpan> pool(gold.begin(), gold.end());
  for (const auto& s : sys) {
    const auto it = pool.find(s);
    if (it != pool.end()) {
      ++out[s.subcategory].tp;
      pool.erase(it);
    } else {
      ++out[s.subcategory].fp;
    }
  }
  for (const auto& g : pool) ++out[g.subcategory].fn;
  return out;
}

MatchCounts match_relaxed(std::span<const PhiSpan> gold, std::span<const PhiSpan> sys, std::size_t tolerance) {
  MatchCounts out;
  std::vector<bool> used(sys.size(), false);
  for (const auto& g : gold) {
    bool matched = false;
    for (std::size_t j = 0; j < sys.size() && !matched; ++j) {
      const auto& s = sys[j];
      if (used[j] || s.subcategory != g.subcategory || s.start != g.start) continue;
      const std::size_t delta = s.end > g.end ? s.end - g.end : g.end - s.end;
      if (delta <= tolerance) {
        used[j] = true;
        matched = true;
      }
    }
    if (matched) {
      ++out[g.subcategory].tp;
    } else {
      ++out[g.subcategory].fn;
    }
  }
  for (std::size_t j = 0; j < sys.size(); ++j) {
    if (!used[j]) ++out[sys[j].subcategory].fp;
  }
  return out;
}

MatchCounts match_token(std::span<const PhiSpan> gold, std::span<const PhiSpan> sys, std::span<const Token> tokens) {
  MatchCounts out;
  auto covering = [](std::span<const PhiSpan> spans, const Token& t) {
    std::vector<Subcategory> subs;
    for (const auto& s : spans) {
      if (s.start < t.end && t.start < s.end) subs.push_back(s.subcategory);
    }
    return subs;
  };
  for (const auto& t : tokens) {
    const auto g = covering(gold, t);
    const auto s = covering(sys, t);
    for (auto sub : g) {
      if (std::find(s.begin(), s.end(), sub) != s.end()) {
        ++out[sub].tp;
      } else {
        ++out[sub].fn;
      }
    }
    for (auto sub : s) {
      if (std::find(g.begin(), g.end(), sub) == g.end()) ++out[sub].fp;
    }
  }
  return out;
}

MatchCounts match(MatchLevel level, std::span<const PhiSpan> gold, std::span<const PhiSpan> sys,
                  std::span<const Token> tokens) {
  switch (level) {
    case MatchLevel::Strict:
      return match_strict(gold, sys);
    case MatchLevel::Relaxed:
      return match_relaxed(gold, sys);
    case MatchLevel::Token:
      return match_token(gold, sys, tokens);
  }
  return {};
}

Prf prf(const Counts& c) {
  Prf r;
  const double tp = static_cast<double>(c.tp);
  if (c.tp + c.fp > 0) r.precision = tp / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) r.recall = tp / static_cast<double>(c.tp + c.fn);
  if (r.precision + r.recall > 0.0) r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

Prf aggregate(std::span<const Counts> per_document, Aggregation mode) {
  if (mode == Aggregation::Micro) {
    Counts total;
    for (const auto& c : per_document) total += c;
    return prf(total);
  }
  Prf sum;
  std::size_t n = 0;
  for (const auto& c : per_document) {
    if (c.tp + c.fp + c.fn == 0) continue;
    const Prf p = prf(c);
    sum.precision += p.precision;
    sum.recall += p.recall;
    sum.f1 += p.f1;
    ++n;
  }
  if (n == 0) return {};
  const double k = static_cast<double>(n);
  return {sum.precision / k, sum.recall / k, sum.f1 / k};
}

CategorySet CategorySet::i2b2() {
  std::bitset<kSubcategoryCount> all;
  all.set();
  return {"I2B2", all};
}

CategorySet CategorySet::hipaa() {
  return find_category_set(parse_category_sets(resources::default_category_sets()), "HIPAA");
}

std::map<std::string, CategorySet> parse_category_sets(std::string_view text) {
  std::map<std::string, std::bitset<kSubcategoryCount>> members;
  std::string current;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = std::min(text.find('\n', pos), text.size());
    const auto line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++lineno;
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ParseError("category sets:" + std::to_string(lineno) + ": bad heading");
      }
      current = upper(trim(line.substr(1, line.size() - 2)));
      members[current];
      continue;
    }
    if (current.empty()) throw ParseError("category sets:" + std::to_string(lineno) + ": entry before heading");
    const auto sub = parse_subcategory(upper(line));
    if (!sub) {
      throw ParseError("category sets:" + std::to_string(lineno) + ": unknown subcategory '" + std::string(line) + "'");
    }
    members[current].set(index_of(*sub));
  }
  std::map<std::string, CategorySet> out;
  out.emplace("I2B2", CategorySet::i2b2());
  for (const auto& [name, bits] : members) out.insert_or_assign(name, CategorySet(name, bits));
  return out;
}

CategorySet find_category_set(const std::map<std::string, CategorySet>& sets, std::string_view name) {
  const auto it = sets.find(upper(name));
  if (it == sets.end()) throw DataError("unknown category set '" + std::string(name) + "'");
  return it->second;
}

std::vector<PhiSpan> filter_category_set(std::span<const PhiSpan> spans, const CategorySet& set) {
  std::vector<PhiSpan> out;
  for (const auto& s : spans) {
    if (set.contains(s.subcategory)) out.push_back(s);
  }
  return out;
}

RandomizationResult approx_randomization(std::span<const double> a, std::span<const double> b, std::size_t trials,
                                         std::uint64_t seed) {
  if (a.size() != b.size()) throw std::invalid_argument("approx_randomization: score lists differ in length");
  if (trials < 1) throw std::invalid_argument("approx_randomization: M must be >= 1");
  RandomizationResult r;
  r.trials = trials;
  r.d = diff_sum(a, b);
  for (std::size_t j = 0; j < trials; ++j) {
    Rng rng(mix_seed(seed, j));
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double diff = a[i] - b[i];
      s += (rng.next() >> 63) != 0 ? -diff : diff;
    }
    if (at_least(std::abs(s), r.d)) ++r.m;
  }
  r.alpha = static_cast<double>(r.m + 1) / static_cast<double>(trials + 1);
  return r;
}

RandomizationResult approx_randomization_exhaustive(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("approx_randomization: score lists differ in length");
  if (a.size() > 30) throw std::invalid_argument("exhaustive randomization limited to n <= 30");
  RandomizationResult r;
  r.d = diff_sum(a, b);
  const std::uint64_t patterns = std::uint64_t{1} << a.size();
  r.trials = static_cast<std::size_t>(patterns);
  for (std::uint64_t mask = 0; mask < patterns; ++mask) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double diff = a[i] - b[i];
      s += (mask >> i) & 1u ? -diff : diff;
    }
    if (at_least(std::abs(s), r.d)) ++r.m;
  }
  r.alpha = static_cast<double>(r.m + 1) / static_cast<double>(patterns + 1);
  return r;
}

EvalReport evaluate(const Corpus& gold, const Corpus& sys, MatchLevel level, const CategorySet& set,
                    const Corpus* train) {
  std::unordered_map<std::string, const Document*> by_id;
  for (const auto& d : sys) by_id.emplace(d.id, &d);

  EvalReport report;
  report.level = level;
  report.category_set = set.name();
  MatchCounts totals;
  for (const auto& g : gold) {
    const auto gs = filter_category_set(g.gold, set);
    std::vector<PhiSpan> ss;
    if (const auto it = by_id.find(g.id); it != by_id.end()) ss = filter_category_set(it->second->gold, set);
    std::vector<Token> local;
    std::span<const Token> tokens = g.tokens;
    if (level == MatchLevel::Token && !g.preprocessed()) {
      local = tokenize(std::string_view(g.text));
      tokens = local;
    }
    const MatchCounts mc = match(level, gs, ss, tokens);
    totals += mc;
    report.per_document.push_back(mc.total());
  }

  std::array<std::size_t, kSubcategoryCount> train_counts{};
  if (train != nullptr) {
    for (const auto& d : *train) {
      for (const auto& s : d.gold) ++train_counts[index_of(s.subcategory)];
    }
  }
  for (auto sub : all_subcategories()) {
    if (!set.contains(sub)) continue;
    const Counts& c = totals[sub];
    report.rows.push_back({sub, train_counts[index_of(sub)], c.tp + c.fn, c.tp + c.fp, c.tp, prf(c)});
  }
  report.total = totals.total();
  report.micro = prf(report.total);
  report.macro = aggregate(report.per_document, Aggregation::Macro);
  return report;
}

std::string format_report(const EvalReport& report, bool with_train) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "level=%s set=%s\n", std::string(to_string(report.level)).c_str(),
                report.category_set.c_str());
  out += buf;
  if (with_train) {
    std::snprintf(buf, sizeof buf, "%-11s %-15s %7s %7s %7s %7s %7s %7s %7s\n", "Category", "Subcategory", "#Train",
                  "#Gold", "#System", "#Agree", "P", "R", "F");
  } else {
    std::snprintf(buf, sizeof buf, "%-11s %-15s %7s %7s %7s %7s %7s %7s\n", "Category", "Subcategory", "#Gold",
                  "#System", "#Agree", "P", "R", "F");
  }
  out += buf;
  std::optional<Category> last;
  for (const auto& row : report.rows) {
    const Category cat = category_of(row.subcategory);
    const std::string cat_name = last == cat ? "" : std::string(to_string(cat));
    last = cat;
    const std::string sub = std::string(to_string(row.subcategory));
    if (with_train) {
      std::snprintf(buf, sizeof buf, "%-11s %-15s %7zu %7zu %7zu %7zu %7.4f %7.4f %7.4f\n", cat_name.c_str(),
                    sub.c_str(), row.train, row.gold, row.system, row.agree, row.scores.precision,
                    row.scores.recall, row.scores.f1);
    } else {
      std::snprintf(buf, sizeof buf, "%-11s %-15s %7zu %7zu %7zu %7.4f %7.4f %7.4f\n", cat_name.c_str(), sub.c_str(),
                    row.gold, row.system, row.agree, row.scores.precision, row.scores.recall, row.scores.f1);
    }
    out += buf;
  }
  const Counts& t = report.total;
  std::snprintf(buf, sizeof buf, "%-27s %7zu %7zu %7zu %7.4f %7.4f %7.4f\n", with_train ? "micro" : "micro",
                t.tp + t.fn, t.tp + t.fp, t.tp, report.micro.precision, report.micro.recall, report.micro.f1);
  if (with_train) {
    std::snprintf(buf, sizeof buf, "%-35s %7zu %7zu %7zu %7.4f %7.4f %7.4f\n", "micro", t.tp + t.fn, t.tp + t.fp,
                  t.tp, report.micro.precision, report.micro.recall, report.micro.f1);
  }
  out += buf;
  std::snprintf(buf, sizeof buf, "%-*s %7s %7s %7s %7.4f %7.4f %7.4f\n", with_train ? 35 : 27, "macro", "", "", "",
                report.macro.precision, report.macro.recall, report.macro.f1);
  out += buf;
  return out;
}

std::string report_csv(const EvalReport& report) {
  std::string out = "subcategory,train,gold,system,agree,p,r,f\n";
  char buf[256];
  for (const auto& row : report.rows) {
    std::snprintf(buf, sizeof buf, "%s,%zu,%zu,%zu,%zu,%.6f,%.6f,%.6f\n",
                  std::string(to_string(row.subcategory)).c_str(), row.train, row.gold, row.system, row.agree,
                  row.scores.precision, row.scores.recall, row.scores.f1);
    out += buf;
  }
  const Counts& t = report.total;
  std::snprintf(buf, sizeof buf, "micro,,%zu,%zu,%zu,%.6f,%.6f,%.6f\n", t.tp + t.fn, t.tp + t.fp, t.tp,
                report.micro.precision, report.micro.recall, report.micro.f1);
  out += buf;
  std::snprintf(buf, sizeof buf, "macro,,,,,%.6f,%.6f,%.6f\n", report.macro.precision, report.macro.recall,
                report.macro.f1);
  out += buf;
  return out;
}

std::string format_overview(const Corpus& gold, const Corpus& sys, const std::map<std::string, CategorySet>& sets) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-8s %-3s %8s %8s %8s\n", "set", "", "strict", "relaxed", "token");
  out += buf;
  for (const auto& [name, set] : sets) {
    std::array<Prf, 3> level{};
    for (std::size_t l = 0; l < 3; ++l) level[l] = evaluate(gold, sys, static_cast<MatchLevel>(l), set).micro;
    const std::array<std::pair<const char*, Metric>, 3> rows = {
        {{"P", Metric::Precision}, {"R", Metric::Recall}, {"F", Metric::F1}}};
    for (const auto& [label, metric] : rows) {
      std::snprintf(buf, sizeof buf, "%-8s %-3s %8.4f %8.4f %8.4f\n", name.c_str(), label, level[0].get(metric),
                    level[1].get(metric), level[2].get(metric));
      out += buf;
    }
  }
  return out;
}

std::vector<double> per_record_scores(const EvalReport& report, Metric metric) {
  std::vector<double> out;
  out.reserve(report.per_document.size());
  for (const auto& c : report.per_document) out.push_back(prf(c).get(metric));
  return out;
}

}  // namespace deid
