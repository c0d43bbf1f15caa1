#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace spanie {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input file (bad JSON, wrong field shapes).
struct ParseError : Error {
  using Error::Error;
};

// Well-formed input that violates a data invariant.
struct ValidationError : Error {
  using Error::Error;
};

// Invalid configuration value or key.
struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

// A contiguous token sequence inside one sentence. Token indices are
// document-level and end-inclusive.
struct Span {
  int start = 0;
  int end = 0;
  int sentence = 0;

  int width() const { return end - start + 1; }

  friend auto operator<=>(const Span& a, const Span& b) {
    if (auto c = a.start <=> b.start; c != 0) return c;
    return a.end <=> b.end;
  }
  friend bool operator==(const Span& a, const Span& b) {
    return a.start == b.start && a.end == b.end;
  }
};

struct SpanHash {
  std::size_t operator()(const Span& s) const {
    return std::hash<std::int64_t>()((std::int64_t(s.start) << 32) ^
                                     std::uint32_t(s.end));
  }
};

// Closed label set; Null is the distinguished no-label outcome.
enum class EntityType : int {
  Null = 0,
  Task,
  Method,
  Metric,
  Material,
  OtherScientificTerm,
  Generic,
};

inline constexpr int kNumEntityTypes = 7;  // including Null

enum class RelationType : int {
  Null = 0,
  Compare,
  PartOf,
  Conjunction,
  EvaluateFor,
  FeatureOf,
  UsedFor,
  HyponymOf,
};

inline constexpr int kNumRelationTypes = 8;  // including Null

// Direction is ignored for exactly these two types.
inline bool is_symmetric(RelationType t) {
  return t == RelationType::Compare || t == RelationType::Conjunction;
}

const std::string& to_string(EntityType t);
const std::string& to_string(RelationType t);

// Accepts canonical names plus common wire variants ("OtherScientificTerm",
// "USED-FOR"); matching ignores case and punctuation. Throws ValidationError
// on unknown labels.
EntityType parse_entity_type(const std::string& label);
RelationType parse_relation_type(const std::string& label);

}  // namespace spanie
