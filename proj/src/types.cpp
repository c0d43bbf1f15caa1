#include "spanie/types.hpp"

#include <array>
#include <cctype>

namespace spanie {

namespace {

const std::array<std::string, kNumEntityTypes> kEntityNames = {
    "", "Task", "Method", "Metric", "Material", "Other-ScientificTerm",
    "Generic"};

const std::array<std::string, kNumRelationTypes> kRelationNames = {
    "",           "Compare",    "Part-of",  "Conjunction",
    "Evaluate-for", "Feature-of", "Used-for", "Hyponym-Of"};

// Lower-cases and strips everything but letters and digits, so that
// "Used-for", "USED-FOR" and "usedfor" all compare equal.
std::string fold_label(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (unsigned char c : s) {
    if (std::isalnum(c)) out.push_back(char(std::tolower(c)));
  }
  return out;
}

}  // namespace

const std::string& to_string(EntityType t) {
  return kEntityNames[static_cast<int>(t)];
}

const std::string& to_string(RelationType t) {
  return kRelationNames[static_cast<int>(t)];
}

EntityType parse_entity_type(const std::string& label) {
  std::string key = fold_label(label);
  for (int i = 1; i < kNumEntityTypes; ++i) {
    if (key == fold_label(kEntityNames[i])) return EntityType(i);
  }
  throw ValidationError("unknown entity label: \"" + label + "\"");
}

RelationType parse_relation_type(const std::string& label) {
  std::string key = fold_label(label);
  for (int i = 1; i < kNumRelationTypes; ++i) {
    if (key == fold_label(kRelationNames[i])) return RelationType(i);
  }
  throw ValidationError("unknown relation label: \"" + label + "\"");
}

}  // namespace spanie
