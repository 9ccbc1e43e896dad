#include "deid/taxonomy.hpp"

namespace deid {
namespace {

constexpr std::array<std::string_view, kCategoryCount> kCategoryNames = {
    "NAME", "PROFESSION", "LOCATION", "AGE", "DATE", "CONTACT", "ID"};

constexpr std::array<std::string_view, kSubcategoryCount> kSubNames = {
    "PATIENT", "DOCTOR", "USERNAME", "PROFESSION", "HOSPITAL",       "ORGANIZATION",
    "STREET",  "CITY",   "STATE",    "COUNTRY",    "ZIP",            "LOCATION-OTHER",
    "AGE",     "DATE",   "PHONE",    "FAX",        "EMAIL",          "URL",
    "MEDICALRECORD",     "HEALTHPLAN", "LICENSE",  "IDNUM"};

constexpr std::array<std::string_view, kSubcategoryCount> kShortNames = {
    "Pt", "Dct", "Usr", "Pf",  "Hpt", "Og",  "Strt", "Ct",  "Stat", "Cnty", "Zip",
    "L-O", "Age", "Dt", "Phn", "Fax", "Em",  "Url",  "Mrd", "Hp",   "Lcs",  "ID"};

}  // namespace

std::string_view to_string(Category c) { return kCategoryNames[static_cast<std::size_t>(c)]; }
std::string_view to_string(Subcategory s) { return kSubNames[index_of(s)]; }
std::string_view short_name(Subcategory s) { return kShortNames[index_of(s)]; }

std::optional<Category> parse_category(std::string_view name) {
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
    if (kCategoryNames[i] == name) return static_cast<Category>(i);
  }
  return std::nullopt;
}

std::optional<Subcategory> parse_subcategory(std::string_view name) {
  for (std::size_t i = 0; i < kSubNames.size(); ++i) {
    if (kSubNames[i] == name) return subcategory_at(i);
  }
  return std::nullopt;
}

}  // namespace deid
