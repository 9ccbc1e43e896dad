#include "deid/error_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <unordered_map>

namespace deid {
namespace {

std::size_t overlap(const PhiSpan& a, const PhiSpan& b) {
  const std::size_t lo = std::max(a.start, b.start);
  const std::size_t hi = std::min(a.end, b.end);
  return hi > lo ? hi - lo : 0;
}

// Extent is judged against every gold span the system span touches: long
// only if it covers all of them, so a span that swallows one entity and
// clips the next is short&long.
ErrorKind pair_kind(const PhiSpan& g, const PhiSpan& s, std::span<const PhiSpan> gold) {
  if (g.start == s.start && g.end == s.end) {
    return g.subcategory == s.subcategory ? ErrorKind::Correct : ErrorKind::Type;
  }
  if (s.start >= g.start && s.end <= g.end) return ErrorKind::ExtentShort;
  for (const auto& other : gold) {
    if (overlap(other, s) > 0 && !(s.start <= other.start && s.end >= other.end)) return ErrorKind::ExtentShortLong;
  }
  return ErrorKind::ExtentLong;
}

bool is_extent(ErrorKind k) {
  return k == ErrorKind::ExtentShort || k == ErrorKind::ExtentLong || k == ErrorKind::ExtentShortLong;
}

}  // namespace

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Correct:
      return "CORRECT";
    case ErrorKind::Type:
      return "TYPE";
    case ErrorKind::ExtentShort:
      return "EXTENT_SHORT";
    case ErrorKind::ExtentLong:
      return "EXTENT_LONG";
    case ErrorKind::ExtentShortLong:
      return "EXTENT_SHORT_LONG";
    case ErrorKind::Spurious:
      return "SPURIOUS";
    case ErrorKind::Missing:
      return "MISSING";
  }
  return "?";
}

std::vector<ErrorRecord> classify(std::span<const PhiSpan> gold, std::span<const PhiSpan> sys,
                                  std::string_view document) {
  std::vector<ErrorRecord> out;
  std::vector<bool> paired(gold.size(), false);
  for (const auto& s : sys) {
    std::size_t best = gold.size();
    std::size_t best_overlap = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      const std::size_t o = overlap(gold[i], s);
      if (o > best_overlap) {
        best_overlap = o;
        best = i;
      }
    }
    ErrorRecord r;
    r.system = s;
    r.document = std::string(document);
    if (best == gold.size()) {
      r.kind = ErrorKind::Spurious;
    } else {
      r.gold = gold[best];
      r.kind = pair_kind(gold[best], s, gold);
      paired[best] = true;
    }
    out.push_back(std::move(r));
  }
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (!paired[i]) out.push_back({ErrorKind::Missing, gold[i], std::nullopt, std::string(document)});
  }
  return out;
}

std::vector<ErrorRecord> classify(const Corpus& gold, const Corpus& sys) {
  std::unordered_map<std::string, const Document*> by_id;
  for (const auto& d : sys) by_id.emplace(d.id, &d);
  std::vector<ErrorRecord> out;
  for (const auto& g : gold) {
    std::span<const PhiSpan> s;
    if (const auto it = by_id.find(g.id); it != by_id.end()) s = it->second->gold;
    auto part = classify(g.gold, s, g.id);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

std::size_t ErrorMatrix::gold_total(Subcategory g) const {
  std::size_t n = missing[index_of(g)] + extent[index_of(g)];
  for (auto v : cells[index_of(g)]) n += v;
  return n;
}

std::size_t ErrorMatrix::system_total(Subcategory s) const {
  const std::size_t j = index_of(s);
  std::size_t n = spurious[j] + short_[j] + long_[j] + short_long[j];
  for (const auto& row : cells) n += row[j];
  return n;
}

std::size_t ErrorMatrix::records() const {
  std::size_t n = 0;
  for (auto v : by_kind) n += v;
  return n;
}

ErrorMatrix error_matrix(std::span<const ErrorRecord> records) {
  ErrorMatrix m;
  // A gold span can be the partner of several extent records; count it once.
  std::set<std::pair<std::string, PhiSpan>> extent_gold;
  for (const auto& r : records) {
    ++m.by_kind[static_cast<std::size_t>(r.kind)];
    switch (r.kind) {
      case ErrorKind::Correct:
      case ErrorKind::Type:
        ++m.cells[index_of(r.gold->subcategory)][index_of(r.system->subcategory)];
        break;
      case ErrorKind::ExtentShort:
        ++m.short_[index_of(r.system->subcategory)];
        break;
      case ErrorKind::ExtentLong:
        ++m.long_[index_of(r.system->subcategory)];
        break;
      case ErrorKind::ExtentShortLong:
        ++m.short_long[index_of(r.system->subcategory)];
        break;
      case ErrorKind::Spurious:
        ++m.spurious[index_of(r.system->subcategory)];
        break;
      case ErrorKind::Missing:
        ++m.missing[index_of(r.gold->subcategory)];
        break;
    }
    if (is_extent(r.kind) && extent_gold.emplace(r.document, *r.gold).second) {
      ++m.extent[index_of(r.gold->subcategory)];
    }
  }
  return m;
}

namespace {

std::string cell(std::size_t count, std::size_t denom, bool percent) {
  if (count == 0) return "";
  if (!percent) return std::to_string(count);
  const double p = denom == 0 ? 0.0 : 100.0 * static_cast<double>(count) / static_cast<double>(denom);
  return std::to_string(static_cast<long long>(std::lround(p))) + "%";
}

void append_row(std::string& out, std::string_view label, const std::vector<std::string>& cols) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%-15s", std::string(label).c_str());
  out += buf;
  for (const auto& c : cols) {
    std::snprintf(buf, sizeof buf, " %6s", c.c_str());
    out += buf;
  }
  out += '\n';
}

}  // namespace

std::string format_error_matrix(const ErrorMatrix& m, bool percent) {
  std::string out;
  std::vector<std::string> cols;
  for (auto s : all_subcategories()) cols.emplace_back(short_name(s));
  cols.emplace_back("Miss");
  cols.emplace_back("Ext");
  cols.emplace_back("Total");
  append_row(out, "", cols);

  std::array<std::size_t, kSubcategoryCount> sys_total{};
  for (auto s : all_subcategories()) sys_total[index_of(s)] = m.system_total(s);

  ErrorMatrix::Row column_sum{};
  std::size_t missing_sum = 0;
  std::size_t extent_sum = 0;
  for (auto g : all_subcategories()) {
    const std::size_t i = index_of(g);
    const std::size_t total = m.gold_total(g);
    cols.clear();
    for (std::size_t j = 0; j < kSubcategoryCount; ++j) {
      cols.push_back(cell(m.cells[i][j], sys_total[j], percent));
      column_sum[j] += m.cells[i][j];
    }
    cols.push_back(cell(m.missing[i], total, percent));
    cols.push_back(cell(m.extent[i], total, percent));
    cols.push_back(std::to_string(total));
    missing_sum += m.missing[i];
    extent_sum += m.extent[i];
    append_row(out, to_string(g), cols);
  }

  auto summary_row = [&](std::string_view label, const ErrorMatrix::Row& row, bool scale) {
    cols.clear();
    std::size_t total = 0;
    for (std::size_t j = 0; j < kSubcategoryCount; ++j) {
      cols.push_back(scale ? cell(row[j], sys_total[j], percent) : std::to_string(row[j]));
      total += row[j];
    }
    cols.emplace_back("");
    cols.emplace_back("");
    cols.push_back(std::to_string(total));
    append_row(out, label, cols);
  };
  summary_row("total", column_sum, false);
  summary_row("Spurious", m.spurious, true);
  summary_row("short", m.short_, true);
  summary_row("long", m.long_, true);
  summary_row("sl", m.short_long, true);
  summary_row("system", sys_total, false);

  char buf[128];
  std::snprintf(buf, sizeof buf, "missing=%zu extent_gold=%zu records=%zu\n", missing_sum, extent_sum, m.records());
  out += buf;
  return out;
}

std::string error_matrix_csv(const ErrorMatrix& m) {
  std::string out = "row,column,count\n";
  auto emit = [&](std::string_view row, std::string_view col, std::size_t n) {
    if (n == 0) return;
    out += std::string(row) + "," + std::string(col) + "," + std::to_string(n) + "\n";
  };
  for (auto g : all_subcategories()) {
    for (auto s : all_subcategories()) emit(to_string(g), to_string(s), m.cells[index_of(g)][index_of(s)]);
    emit(to_string(g), "MISSING", m.missing[index_of(g)]);
    emit(to_string(g), "EXTENT", m.extent[index_of(g)]);
  }
  for (auto s : all_subcategories()) {
    emit("SPURIOUS", to_string(s), m.spurious[index_of(s)]);
    emit("SHORT", to_string(s), m.short_[index_of(s)]);
    emit("LONG", to_string(s), m.long_[index_of(s)]);
    emit("SHORT_LONG", to_string(s), m.short_long[index_of(s)]);
  }
  return out;
}

double quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::array<FrequencySummary, kSubcategoryCount> doc_frequency(const Corpus& corpus) {
  std::array<std::map<std::string, std::size_t>, kSubcategoryCount> freq;
  for (const auto& doc : corpus) {
    std::array<std::set<std::string>, kSubcategoryCount> seen;
    for (const auto& s : doc.gold) seen[index_of(s.subcategory)].insert(doc.slice(s.start, s.end));
    for (std::size_t k = 0; k < kSubcategoryCount; ++k) {
      for (const auto& surface : seen[k]) ++freq[k][surface];
    }
  }
  std::array<FrequencySummary, kSubcategoryCount> out{};
  for (std::size_t k = 0; k < kSubcategoryCount; ++k) {
    auto& row = out[k];
    row.subcategory = subcategory_at(k);
    std::vector<double> values;
    for (const auto& [surface, n] : freq[k]) values.push_back(static_cast<double>(n));
    std::sort(values.begin(), values.end());
    row.surfaces = values.size();
    if (values.empty()) continue;
    row.min = values.front();
    row.q1 = quantile(values, 0.25);
    row.median = quantile(values, 0.5);
    row.q3 = quantile(values, 0.75);
    row.max = values.back();
  }
  return out;
}

std::string format_doc_frequency(std::span<const FrequencySummary> rows) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-15s %8s %8s %8s %8s %8s %8s\n", "Subcategory", "#Forms", "Min", "Q1", "Median",
                "Q3", "Max");
  out += buf;
  for (const auto& r : rows) {
    const std::string name(to_string(r.subcategory));
    if (r.surfaces == 0) {
      std::snprintf(buf, sizeof buf, "%-15s %8d\n", name.c_str(), 0);
    } else {
      std::snprintf(buf, sizeof buf, "%-15s %8zu %8g %8g %8g %8g %8g\n", name.c_str(), r.surfaces, r.min, r.q1,
                    r.median, r.q3, r.max);
    }
    out += buf;
  }
  return out;
}

}  // namespace deid
