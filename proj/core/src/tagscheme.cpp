#include "deid/tagscheme.hpp"

#include <algorithm>

namespace deid {
namespace {

constexpr std::string_view kPrefixNames = "OBIEU";

}  // namespace

LabelId label_id(Label label) {
  if (label.prefix == Prefix::O) return kOutside;
  return static_cast<LabelId>(1 + 4 * index_of(label.subcategory) + (static_cast<std::size_t>(label.prefix) - 1));
}

Label label_at(LabelId id) {
  if (id == kOutside) return {};
  if (id >= kLabelCount) throw std::out_of_range("label id " + std::to_string(id));
  const std::size_t k = id - 1;
  return {static_cast<Prefix>(1 + k % 4), subcategory_at(k / 4)};
}

std::string label_string(LabelId id) {
  const Label l = label_at(id);
  if (l.prefix == Prefix::O) return "O";
  std::string out(1, kPrefixNames[static_cast<std::size_t>(l.prefix)]);
  out += '-';
  out += to_string(l.subcategory);
  return out;
}

std::optional<LabelId> parse_label(std::string_view text) {
  if (text == "O") return kOutside;
  if (text.size() < 3 || text[1] != '-') return std::nullopt;
  const auto p = kPrefixNames.find(text[0]);
  if (p == std::string_view::npos || p == 0) return std::nullopt;
  const auto sub = parse_subcategory(text.substr(2));
  if (!sub) return std::nullopt;
  return label_id({static_cast<Prefix>(p), *sub});
}

std::vector<LabelId> encode(std::span<const Token> tokens, std::span<const PhiSpan> spans) {
  std::vector<LabelId> labels(tokens.size(), kOutside);
  if (tokens.empty()) return labels;
  const std::size_t lo = tokens.front().start;
  const std::size_t hi = tokens.back().end;

  auto fail = [](const PhiSpan& s, const char* why) {
    throw MisalignmentError("span [" + std::to_string(s.start) + "," + std::to_string(s.end) + ") " +
                                std::string(to_string(s.subcategory)) + " " + why,
                            s);
  };

  for (const auto& span : spans) {
    if (span.end <= lo || span.start >= hi) continue;
    // First token ending after span.start.
    auto first = std::partition_point(tokens.begin(), tokens.end(),
                                      [&](const Token& t) { return t.end <= span.start; });
    if (first == tokens.end() || first->start != span.start) fail(span, "does not start on a token boundary");
    auto last = first;
    while (last + 1 != tokens.end() && (last + 1)->start < span.end) ++last;
    if (last->end != span.end) fail(span, "does not end on a token boundary");

    const auto b = static_cast<std::size_t>(first - tokens.begin());
    const auto e = static_cast<std::size_t>(last - tokens.begin());
    for (std::size_t i = b; i <= e; ++i) {
      if (labels[i] != kOutside) fail(span, "overlaps another span");
    }
    if (b == e) {
      labels[b] = label_id({Prefix::U, span.subcategory});
      continue;
    }
    labels[b] = label_id({Prefix::B, span.subcategory});
    for (std::size_t i = b + 1; i < e; ++i) labels[i] = label_id({Prefix::I, span.subcategory});
    labels[e] = label_id({Prefix::E, span.subcategory});
  }
  return labels;
}

std::vector<PhiSpan> decode(std::span<const LabelId> labels, std::span<const Token> tokens) {
  if (labels.size() != tokens.size()) {
    throw std::invalid_argument("decode: " + std::to_string(labels.size()) + " labels for " +
                                std::to_string(tokens.size()) + " tokens");
  }
  std::vector<PhiSpan> out;
  std::size_t i = 0;
  while (i < labels.size()) {
    if (labels[i] == kOutside) {
      ++i;
      continue;
    }
    const Subcategory sub = label_at(labels[i]).subcategory;
    std::size_t j = i;
    while (j < labels.size() && labels[j] != kOutside && label_at(labels[j]).subcategory == sub) ++j;

    // Try to read [i, j) as a sequence of U and B I* E chunks.
    std::vector<std::pair<std::size_t, std::size_t>> chunks;
    bool ok = true;
    std::size_t k = i;
    while (k < j && ok) {
      const Prefix p = label_at(labels[k]).prefix;
      if (p == Prefix::U) {
        chunks.emplace_back(k, k);
        ++k;
      } else if (p == Prefix::B) {
        std::size_t m = k + 1;
        while (m < j && label_at(labels[m]).prefix == Prefix::I) ++m;
        if (m < j && label_at(labels[m]).prefix == Prefix::E) {
          chunks.emplace_back(k, m);
          k = m + 1;
        } else {
          ok = false;
        }
      } else {
        ok = false;
      }
    }
    if (!ok) {
      chunks.clear();
      chunks.emplace_back(i, j - 1);
    }
    for (const auto& [a, b] : chunks) out.push_back({tokens[a].start, tokens[b].end, sub});
    i = j;
  }
  return out;
}

}  // namespace deid
