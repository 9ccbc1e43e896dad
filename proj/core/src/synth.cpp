#include <array>
#include <cstdio>
#include <stdexcept>

#include "deid/common.hpp"
#include "deid/corpus.hpp"
#include "deid/preprocess.hpp"
#include "deid/random.hpp"

namespace deid {
namespace {

using List = std::vector<std::string_view>;

const List kFirstNames = {
    "James",   "Mary",    "Robert",  "Patricia", "John",    "Jennifer", "Michael", "Linda",   "David",   "Elizabeth",
    "William", "Barbara", "Richard", "Susan",    "Joseph",  "Jessica",  "Thomas",  "Sarah",   "Charles", "Karen",
    "Daniel",  "Nancy",   "Matthew", "Lisa",     "Anthony", "Betty",    "Mark",    "Margaret", "Donald", "Sandra",
    "Steven",  "Ashley",  "Paul",    "Kimberly", "Andrew",  "Emily",    "Joshua",  "Donna",   "Kenneth", "Michelle",
    "Kevin",   "Carol",   "Brian",   "Amanda",   "George",  "Melissa",  "Edward",  "Deborah", "Ronald",  "Stephanie",
    "Timothy", "Rebecca", "Jason",   "Laura",    "Jeffrey", "Sharon",   "Ryan",    "Cynthia", "Jacob",   "Kathleen",
    "Gary",    "Amy",     "Nicholas", "Shirley", "Eric",    "Angela",   "Rone",    "Helen",   "Larry",   "Anna"};

const List kLastNames = {
    "Smith",   "Johnson",  "Williams", "Brown",    "Jones",    "Garcia",   "Miller",  "Davis",    "Rodriguez",
    "Martinez", "Hernandez", "Lopez",  "Gonzalez", "Wilson",   "Anderson", "Thomas",  "Taylor",   "Moore",
    "Jackson", "Martin",   "Lee",      "Perez",    "Thompson", "White",    "Harris",  "Sanchez",  "Clark",
    "Ramirez", "Lewis",    "Robinson", "Walker",   "Young",    "Allen",    "King",    "Wright",   "Scott",
    "Torres",  "Nguyen",   "Hill",     "Flores",   "Green",    "Adams",    "Nelson",  "Baker",    "Hall",
    "Rivera",  "Campbell", "Mitchell", "Carter",   "Roberts",  "Gomez",    "Phillips", "Evans",   "Turner",
    "Diaz",    "Parker",   "Cruz",     "Edwards",  "Collins",  "Reyes",    "Stewart", "Morris",   "Morales",
    "Murphy",  "Cook",     "Rogers",   "Gutierrez", "Ortiz",   "Morgan",   "Cooper",  "Peterson", "Bailey"};

// Attending roster: a few names recur across many notes.
const List kDoctors = {"Whalen",  "Vincent", "Oakley",  "Xu",      "Patel",   "Feldman", "Okafor",  "Brennan",
                       "Lindqvist", "Moreau", "Haddad", "Kowalski", "Sato",   "Abernathy", "Quinn", "Delgado",
                       "Fitzgerald", "Yoon",  "Castellano", "Nakamura", "Ivanova", "Becker", "Osei",   "Larsen"};

const List kCities = {"Boston",    "Denver",    "Chicago",   "Seattle",  "Houston",  "Phoenix",    "Portland",
                      "Atlanta",   "Dallas",    "Miami",     "Austin",   "Detroit",  "Memphis",    "Nashville",
                      "Baltimore", "Milwaukee", "Tucson",    "Fresno",   "Omaha",    "Raleigh",    "Cleveland",
                      "Tulsa",     "Wichita",   "Albany",    "Burlington", "Cambridge", "Worcester", "Springfield",
                      "Lowell",    "Salem",     "Fargo",     "Duluth",   "Spokane",  "Provo",      "Lexington",
                      "Brockton",  "Quincy",    "Framingham", "Stamford", "Hartford", "San Diego", "New Haven"};

const List kStates = {"Massachusetts", "California", "Texas",    "Florida",  "Ohio",      "Georgia", "Michigan",
                      "Virginia",      "Oregon",     "Nevada",   "Utah",     "Arizona",   "Colorado", "Kansas",
                      "Iowa",          "Maine",      "Vermont",  "Wyoming",  "Montana",   "Idaho",   "Alaska",
                      "Kentucky",      "Tennessee",  "Alabama",  "Louisiana", "Minnesota", "Wisconsin", "Illinois",
                      "MA",            "CA",         "NY",       "TX",       "New Hampshire", "Rhode Island"};

const List kCountries = {"USA",     "Canada", "Mexico",  "Brazil", "France",  "Germany",  "Italy",  "Spain",
                         "China",   "Japan",  "India",   "Russia", "Ireland", "Haiti",    "Jamaica", "Vietnam",
                         "Korea",   "Poland", "Greece",  "Egypt",  "Nigeria", "Kenya",    "Peru",   "Chile",
                         "Cuba",    "Portugal", "UK",    "Ghana",  "Sweden",  "Norway",   "Turkey", "Colombia"};

const List kProfessions = {"nurse",          "teacher",         "software engineer",  "accountant",
                           "lawyer",         "carpenter",       "electrician",        "construction worker",
                           "cashier",        "mechanic",        "librarian",          "pharmacist",
                           "landscape architect", "chef",       "firefighter",        "paramedic",
                           "bus driver",     "waitress",        "janitor",            "welder",
                           "farmer",         "pilot",           "dentist",            "journalist",
                           "professor",      "graduate student", "bank teller",       "secretary",
                           "police officer", "social worker",   "truck driver",       "hair stylist",
                           "real estate agent", "data analyst", "physical therapist", "line cook"};

const List kPlaceWords = {"Riverside", "Lakeview", "Northgate", "Fairmont", "Greenfield", "Westbrook", "Highland",
                          "Maplewood", "Brookside", "Harborview", "Pinecrest", "Sunnydale", "Oakridge", "Cedarbrook",
                          "Stonebridge", "Elmhurst", "Bayside", "Hillcrest", "Kingsley", "Ashford"};

const List kHospitalSuffix = {"Hospital", "Medical Center", "General Hospital", "Clinic", "Health Center"};
const List kSaints = {"Mary's", "Luke's", "Joseph's", "Anne's", "Elizabeth's"};

const List kOrgSuffix = {"Corporation", "Industries", "High School", "Academy", "Group", "Partners", "College"};
const List kOrgWhole = {"Albemarle Corporation", "Zenith Uni.",   "Bob Evans", "Home Depot",
                        "Walmart",              "Starbucks",     "Boeing",    "Raytheon",
                        "General Electric",     "Fidelity Investments"};

const List kLocationOther = {"Mount Rushmore", "Lake Tahoe", "Yellowstone Park", "Central Park", "Niagara Falls",
                             "Cape Cod",       "Grand Canyon", "Martha's Vineyard", "Walden Pond", "Fenway Park"};

const List kStreetSuffix = {"Street", "Road", "Avenue", "Lane", "Drive", "Boulevard", "St."};
const List kStreetNames = {"Oak", "Maple", "Elm", "Washington", "Lincoln", "Park", "Cedar", "Pine", "Highland",
                           "Summer", "Winter", "Beacon", "Chestnut", "Walnut", "Prospect", "Union"};

const List kMonths = {"January", "February", "March", "April", "May", "June", "July", "August", "September",
                      "October", "November", "December"};
const List kSeasons = {"winter", "spring", "summer", "fall"};
const List kDomains = {"gmail", "yahoo", "hotmail", "aol", "mail", "comcast", "verizon", "outlook"};
const List kTlds = {"com", "org", "net", "edu"};
const List kUrlWords = {"mentalhealth", "nami", "psychtoday", "clinicportal", "wellness", "recoverynow", "mayo",
                        "healthline"};

struct Template {
  std::string_view pattern;
};

// Slots: {SUBCATEGORY} or {SUBCATEGORY|opts} with opts drawn from
// '<' (may glue to the preceding word) and '>' (may glue to the following
// word).
const std::vector<Template> kTemplates = {
    {"{PATIENT} is a {AGE|<} yo {PROFESSION} from {CITY}, {STATE}."},
    {"Ms. {PATIENT} is a {AGE|>} yo woman who lives in {CITY}."},
    {"Mr. {PATIENT} is a {AGE} year old {PROFESSION} referred by Dr. {DOCTOR}."},
    {"Patient was seen by Dr. {DOCTOR|>} Chief complaint is low mood."},
    {"Mr. {PATIENT} presented to {HOSPITAL} on {DATE|>} CPT code 90792 was billed."},
    {"He can be reached at {PHONE|>} Prior to admission he lived alone."},
    {"Her email is {EMAIL|>} Other contacts were not provided."},
    {"She moved from {COUNTRY|>} Meaningful relationships remain limited."},
    {"Dr. {DOCTOR} will follow up on {DATE}."},
    {"She works as a {PROFESSION} at {ORGANIZATION}."},
    {"He lives at {STREET} in {CITY}, {STATE} {ZIP}."},
    {"Fax records to {FAX} attention Dr. {DOCTOR}."},
    {"Medical record number {MEDICALRECORD} was confirmed."},
    {"Health plan ID {HEALTHPLAN} was verified at intake."},
    {"Prescriber license number {LICENSE} is on file."},
    {"Identification number {IDNUM} was provided by the patient."},
    {"Patient portal username {USERNAME} was created today."},
    {"More information is available at {URL} for the family."},
    {"Last summer she visited {LOCATION-OTHER} with her family."},
    {"{PATIENT} was born in {COUNTRY} and immigrated in {DATE}."},
    {"She was hospitalized at {HOSPITAL} in {CITY} at age {AGE}."},
    {"The patient attended {ORGANIZATION} for two years."},
    {"Her mother, {PATIENT}, is a retired {PROFESSION}."},
    {"Case discussed with Dr. {DOCTOR} and Dr. {DOCTOR}."},
    {"Follow-up is scheduled on {DATE} with Dr. {DOCTOR}."},
    {"He reports that his last depressive episode was in {DATE}."},
    {"Attending physician: {DOCTOR}, MD"},
    {"She grew up in {CITY}, {COUNTRY} and attended {ORGANIZATION}."},
    {"Contact her sister {PATIENT} at {PHONE}."},
    {"Referred by Dr. {DOCTOR} of {HOSPITAL}."},
    {"He was admitted to {HOSPITAL} in {STATE} in {DATE}."},
    {"The family relocated to {CITY} when he was {AGE}."},
    {"Pharmacy fax number is {FAX}."},
    {"Her husband works as a {PROFESSION} in {CITY}."},
    {"Seen today, {DATE}, for medication management."},
    {"Mailing address: {STREET}, {CITY}, {STATE} {ZIP}"},
    {"He enjoys hiking near {LOCATION-OTHER} on weekends."},
    {"He denies suicidal or homicidal ideation."},
    {"Mental status exam was notable for a constricted affect."},
    {"Sleep and appetite are fair."},
    {"No history of substance abuse."},
    {"Chief Complaint: anxiety and insomnia."},
    {"Plan: continue sertraline 50 mg daily."},
    {"She drinks 2 cups of coffee per day."},
    {"Family History: depression in maternal aunt."},
    {"The patient was calm and cooperative."},
    {"Insight and judgment are fair."},
    {"She lives with her husband and 2 children."},
    {"Past Psychiatric History: one prior admission in 10 years."},
    {"He last worked 3 years ago."},
    {"Follow up in 4 weeks with Psychiatry Clinic staff."},
    {"Current Medications: lithium 300 mg twice daily."},
    {"Review of Systems was otherwise negative."},
};

struct Piece {
  std::string literal;
  bool is_slot = false;
  Subcategory sub = Subcategory::Patient;
  bool glue_left = false;
  bool glue_right = false;
};

std::vector<Piece> parse_template(std::string_view pattern) {
  std::vector<Piece> pieces;
  std::size_t i = 0;
  while (i < pattern.size()) {
    const std::size_t open = pattern.find('{', i);
    if (open == std::string_view::npos) {
      pieces.push_back({std::string(pattern.substr(i))});
      break;
    }
    if (open > i) pieces.push_back({std::string(pattern.substr(i, open - i))});
    const std::size_t close = pattern.find('}', open);
    auto body = pattern.substr(open + 1, close - open - 1);
    Piece slot;
    slot.is_slot = true;
    if (const auto bar = body.find('|'); bar != std::string_view::npos) {
      const auto opts = body.substr(bar + 1);
      slot.glue_left = opts.find('<') != std::string_view::npos;
      slot.glue_right = opts.find('>') != std::string_view::npos;
      body = body.substr(0, bar);
    }
    const auto sub = parse_subcategory(body);
    if (!sub) throw std::logic_error("bad template slot " + std::string(body));
    slot.sub = *sub;
    pieces.push_back(std::move(slot));
    i = close + 1;
  }
  return pieces;
}

std::string pick(Rng& rng, const List& list) { return std::string(list[rng.below(list.size())]); }

std::string digits(Rng& rng, std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(static_cast<char>('0' + rng.below(10)));
  return s;
}

std::string two(std::uint64_t v) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02llu", static_cast<unsigned long long>(v));
  return buf;
}

class Filler {
 public:
  Filler(Rng& rng) : rng_(rng) {
    patient_first_ = pick(rng_, kFirstNames);
    patient_last_ = pick(rng_, kLastNames);
  }

  std::string fill(Subcategory sub) {
    switch (sub) {
      case Subcategory::Patient: {
        const auto r = rng_.below(4);
        if (r == 0) return patient_first_ + " " + patient_last_;
        if (r == 1) return patient_last_;
        if (r == 2) return pick(rng_, kFirstNames) + " " + pick(rng_, kLastNames);
        return pick(rng_, kLastNames);
      }
      case Subcategory::Doctor: {
        const auto r = rng_.below(3);
        if (r == 0) return pick(rng_, kFirstNames) + " " + pick(rng_, kDoctors);
        return pick(rng_, kDoctors);
      }
      case Subcategory::Username: {
        std::string u = to_lower_ascii(pick(rng_, kFirstNames).substr(0, 1) + pick(rng_, kLastNames));
        if (rng_.bernoulli(0.6)) u += digits(rng_, 2);
        return u;
      }
      case Subcategory::Profession:
        return pick(rng_, kProfessions);
      case Subcategory::Hospital: {
        if (rng_.below(4) == 0) return "St. " + pick(rng_, kSaints) + " Hospital";
        return pick(rng_, kPlaceWords) + " " + pick(rng_, kHospitalSuffix);
      }
      case Subcategory::Organization: {
        const auto r = rng_.below(4);
        if (r == 0) return pick(rng_, kOrgWhole);
        if (r == 1) return "State University of " + pick(rng_, kStates);
        return pick(rng_, kPlaceWords) + " " + pick(rng_, kOrgSuffix);
      }
      case Subcategory::Street:
        return std::to_string(1 + rng_.below(999)) + " " + pick(rng_, kStreetNames) + " " +
               pick(rng_, kStreetSuffix);
      case Subcategory::City:
        return pick(rng_, kCities);
      case Subcategory::State:
        return pick(rng_, kStates);
      case Subcategory::Country:
        return pick(rng_, kCountries);
      case Subcategory::Zip:
        return digits(rng_, 5);
      case Subcategory::LocationOther:
        return pick(rng_, kLocationOther);
      case Subcategory::Age:
        return std::to_string(18 + rng_.below(72));
      case Subcategory::Date:
        return date();
      case Subcategory::Phone:
      case Subcategory::Fax:
        return phone();
      case Subcategory::Email:
        return to_lower_ascii(pick(rng_, kFirstNames).substr(0, 1) + pick(rng_, kLastNames)) +
               (rng_.bernoulli(0.3) ? digits(rng_, 2) : "") + "@" + pick(rng_, kDomains) + "." + pick(rng_, kTlds);
      case Subcategory::Url:
        return (rng_.bernoulli(0.5) ? "www." : "http://www.") + pick(rng_, kUrlWords) + "." + pick(rng_, kTlds);
      case Subcategory::MedicalRecord:
        return digits(rng_, 7 + rng_.below(2));
      case Subcategory::HealthPlan:
        return "HP" + digits(rng_, 6);
      case Subcategory::License: {
        std::string s;
        s.push_back(static_cast<char>('A' + rng_.below(26)));
        s.push_back(static_cast<char>('A' + rng_.below(26)));
        return s + "-" + digits(rng_, 6);
      }
      case Subcategory::IdNum:
        return digits(rng_, 3) + "-" + digits(rng_, 2) + "-" + digits(rng_, 4);
    }
    return {};
  }

 private:
  std::string date() {
    const auto year = std::to_string(2060 + rng_.below(40));
    const auto month = 1 + rng_.below(12);
    const auto day = 1 + rng_.below(28);
    switch (rng_.below(8)) {
      case 0:
        return two(month) + "/" + two(day) + "/" + year;
      case 1:
        return std::to_string(month) + "/" + std::to_string(day) + "/" + year;
      case 2:
        return two(month) + "-" + two(day) + "-" + year;
      case 3:
        return std::to_string(month) + "/" + year;
      case 4:
        return std::string(kMonths[month - 1]) + " " + std::to_string(day) + ", " + year;
      case 5:
        return std::string(kMonths[month - 1]) + " " + year;
      case 6:
        return pick(rng_, kSeasons) + " of " + year;
      default:
        return year;
    }
  }

  std::string phone() {
    const auto a = digits(rng_, 3);
    const auto b = digits(rng_, 3);
    const auto c = digits(rng_, 4);
    switch (rng_.below(4)) {
      case 0:
        return "(" + a + ") " + b + "-" + c;
      case 1:
        return a + "-" + b + "-" + c;
      case 2:
        return a + " " + b + " " + c;
      default:
        return a + "." + b + "." + c;
    }
  }

  Rng& rng_;
  std::string patient_first_;
  std::string patient_last_;
};

struct Rendered {
  std::string text;
  std::vector<PhiSpan> spans;  // offsets relative to text
};

std::size_t char_count(std::string_view s) { return decode_utf8(s).size(); }

Rendered render(const std::vector<Piece>& pieces, const std::vector<std::string>& fillers, bool glue,
                Rng& rng, double glue_rate) {
  Rendered out;
  std::size_t slot = 0;
  bool drop_leading_space = false;
  for (std::size_t p = 0; p < pieces.size(); ++p) {
    const auto& piece = pieces[p];
    if (!piece.is_slot) {
      std::string lit = piece.literal;
      if (drop_leading_space && !lit.empty() && lit.front() == ' ') lit.erase(0, 1);
      drop_leading_space = false;
      out.text += lit;
      continue;
    }
    const bool left = glue && piece.glue_left && rng.bernoulli(glue_rate);
    const bool right = glue && piece.glue_right && !left && rng.bernoulli(glue_rate);
    if (left && !out.text.empty() && out.text.back() == ' ') out.text.pop_back();
    const std::size_t start = char_count(out.text);
    out.text += fillers[slot++];
    out.spans.push_back({start, char_count(out.text), piece.sub});
    drop_leading_space = right;
  }
  return out;
}

bool aligned(const Rendered& r) {
  const auto tokens = tokenize(std::string_view(r.text));
  for (const auto& span : r.spans) {
    bool start_ok = false;
    bool end_ok = false;
    for (const auto& t : tokens) {
      start_ok = start_ok || t.start == span.start;
      end_ok = end_ok || t.end == span.end;
    }
    if (!start_ok || !end_ok) return false;
  }
  return true;
}

Document generate_document(std::size_t index, const SynthConfig& config,
                           const std::vector<std::vector<Piece>>& templates, const std::vector<double>& weights,
                           const std::vector<Piece>& header) {
  Rng rng(mix_seed(config.seed, index));
  Filler filler(rng);
  Document doc;
  char id[32];
  std::snprintf(id, sizeof id, "synth-%04zu", index + 1);
  doc.id = id;

  auto append = [&](const std::vector<Piece>& pieces, std::string_view separator) {
    std::vector<std::string> fillers;
    for (const auto& piece : pieces) {
      if (piece.is_slot) fillers.push_back(filler.fill(piece.sub));
    }
    Rendered r = render(pieces, fillers, true, rng, config.glue_rate);
    if (!aligned(r)) {
      r = render(pieces, fillers, false, rng, config.glue_rate);
      if (!aligned(r)) throw std::logic_error("synthetic template does not align with the tokenizer: " + r.text);
    }
    doc.text += separator;
    const std::size_t base = char_count(doc.text);
    doc.text += r.text;
    for (auto span : r.spans) {
      span.start += base;
      span.end += base;
      doc.gold.push_back(span);
    }
  };

  const bool has_date = config.weights.count(Subcategory::Date) && config.weights.at(Subcategory::Date) > 0;
  if (has_date) append(header, "");

  const std::size_t n =
      config.min_sentences + rng.below(config.max_sentences - config.min_sentences + 1);
  for (std::size_t s = 0; s < n; ++s) {
    const std::string_view sep = doc.text.empty() ? "" : (s % 4 == 0 ? "\n" : " ");
    append(templates[rng.weighted(weights)], sep);
  }
  doc.text += "\n";
  return doc;
}

}  // namespace

std::map<Subcategory, double> SynthConfig::default_weights() {
  std::map<Subcategory, double> w;
  for (auto s : all_subcategories()) w[s] = 1.0;
  return w;
}

Corpus generate_synthetic(const SynthConfig& config) {
  if (config.template_set != "default") throw DataError("unknown template set '" + config.template_set + "'");
  if (config.max_sentences < config.min_sentences) throw DataError("max_sentences < min_sentences");

  auto weight_of = [&](Subcategory s) {
    const auto it = config.weights.find(s);
    return it == config.weights.end() ? 0.0 : it->second;
  };

  std::vector<std::vector<Piece>> templates;
  std::vector<double> weights;
  for (const auto& t : kTemplates) {
    auto pieces = parse_template(t.pattern);
    double sum = 0.0;
    std::size_t slots = 0;
    bool enabled = true;
    for (const auto& p : pieces) {
      if (!p.is_slot) continue;
      ++slots;
      sum += weight_of(p.sub);
      enabled = enabled && weight_of(p.sub) > 0.0;
    }
    if (!enabled) continue;
    weights.push_back(slots == 0 ? 1.0 : sum / static_cast<double>(slots));
    templates.push_back(std::move(pieces));
  }
  const auto header = parse_template("Record date: {DATE}");

  Corpus corpus;
  corpus.reserve(config.document_count);
  for (std::size_t i = 0; i < config.document_count; ++i) {
    corpus.push_back(generate_document(i, config, templates, weights, header));
  }
  return corpus;
}

}  // namespace deid
