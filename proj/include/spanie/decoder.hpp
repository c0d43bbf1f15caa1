#pragma once

#include <vector>

#include "spanie/corpus.hpp"
#include "spanie/model.hpp"
#include "spanie/nn.hpp"

namespace spanie {

// Hard predictions for one document, each task decoded independently.
struct Prediction {
  std::vector<GoldEntity> entities;
  std::vector<GoldRelation> relations;
  std::vector<std::vector<Span>> clusters;  // size >= 2 each
};

// Argmax over every entity distribution; spans whose best label is the
// null label are skipped. Ties prefer the null label, then lower ids.
std::vector<GoldEntity> decode_entities(const nn::Graph& g,
                                        const DocumentScores& scores);

// Argmax per ordered pair. A symmetric relation predicted in both
// directions collapses to one record with arguments in canonical order.
std::vector<GoldRelation> decode_relations(const nn::Graph& g,
                                           const DocumentScores& scores);

// Each beam span links to its best antecedent (or to nothing). Connected
// components of the links form clusters; singletons are dropped.
std::vector<std::vector<Span>> decode_coref(const nn::Graph& g,
                                            const DocumentScores& scores);

Prediction decode(const nn::Graph& g, const DocumentScores& scores);

// Re-packages predictions in the corpus record layout so they serialize
// through the same writer as gold documents.
Document prediction_to_document(const Document& doc, const Prediction& pred);

}  // namespace spanie
