#include "deid/resources.hpp"

#include <array>

namespace deid::resources {
namespace {

// Token-level lists: multi-word entries are split into their words since
// lookups are per token.
constexpr std::array<std::string_view, 40> kProfession = {
    "nurse",      "teacher",    "engineer",   "accountant", "lawyer",     "carpenter",  "electrician", "plumber",
    "cashier",    "mechanic",   "librarian",  "pharmacist", "architect",  "chef",       "firefighter", "paramedic",
    "programmer", "salesman",   "waitress",   "janitor",    "welder",     "farmer",     "pilot",       "dentist",
    "journalist", "professor",  "student",    "clerk",      "secretary",  "veterinarian", "painter",   "driver",
    "worker",     "manager",    "consultant", "therapist",  "analyst",    "technician", "attorney",    "surveyor"};

constexpr std::array<std::string_view, 36> kCity = {
    "boston",   "denver",    "chicago",  "seattle",   "houston",   "phoenix",  "portland",   "atlanta",  "dallas",
    "miami",    "austin",    "detroit",  "memphis",   "nashville", "baltimore", "milwaukee", "tucson",   "fresno",
    "omaha",    "raleigh",   "cleveland", "tulsa",    "wichita",   "honolulu", "anchorage",  "albany",   "burlington",
    "cambridge", "worcester", "springfield", "lowell", "salem",    "fargo",    "duluth",     "spokane",  "provo"};

constexpr std::array<std::string_view, 28> kCountry = {
    "usa",     "canada", "mexico",  "brazil", "france",  "germany",  "italy",  "spain",   "china",   "japan",
    "india",   "russia", "ireland", "haiti",  "jamaica", "vietnam",  "korea",  "poland",  "greece",  "egypt",
    "nigeria", "kenya",  "peru",    "chile",  "cuba",    "portugal", "vincent", "grenadines"};

constexpr std::array<std::string_view, 34> kState = {
    "massachusetts", "california", "texas",     "florida",   "ohio",     "georgia",  "michigan",  "virginia",
    "washington",    "oregon",     "nevada",    "utah",      "arizona",  "colorado", "kansas",    "iowa",
    "maine",         "vermont",    "wyoming",   "montana",   "idaho",    "alaska",   "hawaii",    "kentucky",
    "tennessee",     "alabama",    "louisiana", "minnesota", "wisconsin", "illinois", "indiana",  "missouri",
    "connecticut",   "delaware"};

constexpr std::array<std::string_view, 30> kAbbreviations = {
    "dr.",  "mr.",  "mrs.", "ms.",  "st.",  "vs.",  "e.g.", "i.e.", "jr.", "sr.",
    "prof.", "mt.", "ft.",  "ave.", "apt.", "etc.", "approx.", "dept.", "inc.", "co.",
    "corp.", "ltd.", "no.", "hx.",  "pt.",  "yo.",  "b.i.d.", "t.i.d.", "q.d.", "p.o."};

constexpr std::string_view kCategorySets =
    "# Subcategories evaluated under each category set.\n"
    "# The HIPAA membership below is a documented default, not an official list.\n"
    "[HIPAA]\n"
    "PATIENT\n"
    "USERNAME\n"
    "STREET\n"
    "CITY\n"
    "ZIP\n"
    "LOCATION-OTHER\n"
    "AGE\n"
    "DATE\n"
    "PHONE\n"
    "FAX\n"
    "EMAIL\n"
    "URL\n"
    "MEDICALRECORD\n"
    "HEALTHPLAN\n"
    "LICENSE\n"
    "IDNUM\n";

}  // namespace

std::span<const std::string_view> profession_gazetteer() { return kProfession; }
std::span<const std::string_view> city_gazetteer() { return kCity; }
std::span<const std::string_view> country_gazetteer() { return kCountry; }
std::span<const std::string_view> state_gazetteer() { return kState; }
std::span<const std::string_view> abbreviations() { return kAbbreviations; }
std::string_view default_category_sets() { return kCategorySets; }

}  // namespace deid::resources
