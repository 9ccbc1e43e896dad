#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deid/common.hpp"
#include "deid/corpus.hpp"

namespace deid {

enum class Prefix : unsigned char { O, B, I, E, U };

struct Label {
  Prefix prefix = Prefix::O;
  Subcategory subcategory = Subcategory::Patient;  // ignored when prefix is O

  friend bool operator==(const Label& a, const Label& b) {
    return a.prefix == b.prefix && (a.prefix == Prefix::O || a.subcategory == b.subcategory);
  }
};

/// Dense label ids: O is 0, then B, I, E, U for each subcategory in
/// reporting order.
using LabelId = std::uint16_t;
inline constexpr std::size_t kLabelCount = 4 * kSubcategoryCount + 1;
inline constexpr LabelId kOutside = 0;

LabelId label_id(Label label);
Label label_at(LabelId id);
std::string label_string(LabelId id);
std::optional<LabelId> parse_label(std::string_view text);

/// A gold span that does not start and end on token boundaries.
class MisalignmentError : public DataError {
 public:
  MisalignmentError(const std::string& what, PhiSpan span) : DataError(what), span_(span) {}
  const PhiSpan& span() const { return span_; }

 private:
  PhiSpan span_;
};

/// Labels one token sequence from character-offset spans. Spans that do not
/// touch the tokens' character range are ignored.
std::vector<LabelId> encode(std::span<const Token> tokens, std::span<const PhiSpan> spans);

/// Inverse of encode with lenient repair: within a maximal run of non-O
/// labels sharing a subcategory, well-formed U and B I* E chunks become
/// separate spans if the whole run parses that way; otherwise the run is one
/// span.
std::vector<PhiSpan> decode(std::span<const LabelId> labels, std::span<const Token> tokens);

}  // namespace deid
