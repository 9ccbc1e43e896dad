#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace deid {

/// The seven main PHI categories.
enum class Category : unsigned char { Name, Profession, Location, Age, Date, Contact, Id };

/// The 22 PHI sub-categories, in reporting order.
enum class Subcategory : unsigned char {
  Patient,
  Doctor,
  Username,
  Profession,
  Hospital,
  Organization,
  Street,
  City,
  State,
  Country,
  Zip,
  LocationOther,
  Age,
  Date,
  Phone,
  Fax,
  Email,
  Url,
  MedicalRecord,
  HealthPlan,
  License,
  IdNum,
};

inline constexpr std::size_t kCategoryCount = 7;
inline constexpr std::size_t kSubcategoryCount = 22;

constexpr std::size_t index_of(Subcategory s) { return static_cast<std::size_t>(s); }
constexpr Subcategory subcategory_at(std::size_t i) { return static_cast<Subcategory>(i); }

constexpr Category category_of(Subcategory s) {
  switch (s) {
    case Subcategory::Patient:
    case Subcategory::Doctor:
    case Subcategory::Username:
      return Category::Name;
    case Subcategory::Profession:
      return Category::Profession;
    case Subcategory::Hospital:
    case Subcategory::Organization:
    case Subcategory::Street:
    case Subcategory::City:
    case Subcategory::State:
    case Subcategory::Country:
    case Subcategory::Zip:
    case Subcategory::LocationOther:
      return Category::Location;
    case Subcategory::Age:
      return Category::Age;
    case Subcategory::Date:
      return Category::Date;
    case Subcategory::Phone:
    case Subcategory::Fax:
    case Subcategory::Email:
    case Subcategory::Url:
      return Category::Contact;
    default:
      return Category::Id;
  }
}

std::string_view to_string(Category c);
std::string_view to_string(Subcategory s);
/// Short column label used in the error matrix (Pt, Dct, ...).
std::string_view short_name(Subcategory s);

std::optional<Category> parse_category(std::string_view name);
std::optional<Subcategory> parse_subcategory(std::string_view name);

inline constexpr std::array<Subcategory, kSubcategoryCount> all_subcategories() {
  std::array<Subcategory, kSubcategoryCount> out{};
  for (std::size_t i = 0; i < kSubcategoryCount; ++i) out[i] = subcategory_at(i);
  return out;
}

}  // namespace deid
