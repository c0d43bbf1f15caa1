#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "spanie/types.hpp"

namespace spanie {

struct GoldEntity {
  Span span;
  EntityType type = EntityType::Null;
};

struct GoldRelation {
  Span arg1;
  Span arg2;
  RelationType type = RelationType::Null;
};

// One tokenized, sentence-split abstract with its gold annotations.
// Immutable after load; safe to share across threads.
struct Document {
  std::string doc_key;
  std::vector<std::vector<std::string>> sentences;
  std::vector<GoldEntity> gold_entities;
  std::vector<GoldRelation> gold_relations;
  std::vector<std::vector<Span>> gold_clusters;

  int num_tokens() const;
  // First document-level token index of each sentence, plus a final
  // entry equal to num_tokens().
  std::vector<int> sentence_offsets() const;
  // Sentence containing token index t, or -1 when out of range.
  int sentence_of(int token) const;
  const std::string& token(int index) const;
  std::string span_text(const Span& s) const;

  // Checks every Document invariant; throws ValidationError naming the
  // doc_key on the first violation.
  void validate() const;
};

// Gold targets aligned to an enumerated span list. Antecedent sets hold
// earlier span positions that share the span's cluster; an empty set
// stands for {null} (the span has no earlier coreferent span).
struct GoldAssignment {
  std::vector<EntityType> entity_target;               // per span position
  std::map<std::pair<int, int>, RelationType> relation_target;
  std::vector<std::vector<int>> antecedent_sets;       // per span position
  int dropped_entities = 0;    // gold entities wider than the width cap
  int dropped_relations = 0;   // gold relations with a dropped endpoint
  int dropped_mentions = 0;    // gold cluster mentions wider than the cap

  int dropped_total() const {
    return dropped_entities + dropped_relations + dropped_mentions;
  }
};

struct CorpusStats {
  std::size_t documents = 0;
  std::size_t entities = 0;
  std::size_t relations = 0;
  double relations_per_doc = 0.0;
  std::size_t coref_links = 0;    // sum over clusters of (size - 1)
  std::size_t coref_clusters = 0;
  bool empty_corpus = false;
};

// Reads newline-delimited JSON documents. Parse errors name the line,
// validation errors name the doc_key.
std::vector<Document> load_documents(const std::string& path);
std::vector<Document> parse_documents(std::istream& in,
                                      const std::string& source_name);

// Canonical one-record-per-line serialization; load followed by save is
// byte-identical for canonically formatted input.
void save_documents(const std::vector<Document>& docs,
                    const std::string& path);
std::string document_to_json(const Document& doc);

// Aligns gold annotations with an enumerated span list (canonical order,
// see spanspace). Spans wider than the enumeration cap are counted as
// dropped. Throws ValidationError if one span carries two gold types.
GoldAssignment derive_gold(const Document& doc,
                           const std::vector<Span>& spans);

CorpusStats corpus_stats(const std::vector<Document>& docs);

}  // namespace spanie
