#pragma once

#include <span>
#include <string_view>

namespace deid::resources {

// Bundled fixture lists. Each entry is lowercased; one entry per line in the
// on-disk form under data/.
std::span<const std::string_view> profession_gazetteer();
std::span<const std::string_view> city_gazetteer();
std::span<const std::string_view> country_gazetteer();
std::span<const std::string_view> state_gazetteer();

/// Abbreviations whose trailing period never ends a sentence.
std::span<const std::string_view> abbreviations();

/// Default category-set configuration (INI-like, `[HIPAA]` heading followed by
/// one subcategory per line).
std::string_view default_category_sets();

}  // namespace deid::resources
