#pragma once

#include <set>
#include <string>
#include <vector>

#include "spanie/corpus.hpp"
#include "spanie/types.hpp"

namespace spanie {

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// 0/0 ratios are defined as 0.
double safe_ratio(double num, double den);
double f1_of(double precision, double recall);

// Micro-averaged exact-match counts; summable across documents.
struct MatchCounts {
  std::size_t correct = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;

  MatchCounts& operator+=(const MatchCounts& o);
  PRF to_prf() const;
};

MatchCounts entity_match(const std::vector<GoldEntity>& gold,
                         const std::vector<GoldEntity>& pred);
// Direction counts for asymmetric types; symmetric types match either way.
MatchCounts relation_match(const std::vector<GoldRelation>& gold,
                           const std::vector<GoldRelation>& pred);

PRF entity_prf(const std::vector<Document>& gold,
               const std::vector<Document>& pred);
PRF relation_prf(const std::vector<Document>& gold,
                 const std::vector<Document>& pred);

// Numerators and denominators of one coreference metric; summable across
// documents before the final division.
struct RatioCounts {
  double recall_num = 0.0;
  double recall_den = 0.0;
  double precision_num = 0.0;
  double precision_den = 0.0;

  RatioCounts& operator+=(const RatioCounts& o);
  PRF to_prf() const;
};

using Clusters = std::vector<std::vector<Span>>;

RatioCounts muc_counts(const Clusters& gold, const Clusters& pred);
RatioCounts b_cubed_counts(const Clusters& gold, const Clusters& pred);
RatioCounts ceaf_phi4_counts(const Clusters& gold, const Clusters& pred);

PRF muc(const Clusters& gold, const Clusters& pred);
PRF b_cubed(const Clusters& gold, const Clusters& pred);
PRF ceaf_phi4(const Clusters& gold, const Clusters& pred);

// Unweighted mean of the three metrics' P, R and F1.
PRF coref_avg(const Clusters& gold, const Clusters& pred);
PRF average_prf(const std::vector<PRF>& parts);

// Best total similarity of a one-to-one row/column matching. The second
// form tries every matching and is practical only for small inputs; both
// must agree.
double optimal_alignment_score(const std::vector<std::vector<double>>& sim);
double bruteforce_alignment_score(const std::vector<std::vector<double>>& sim);

// Recall against the union of every system's correct triples. An empty
// union is undefined and reported as 0 with the flag set.
double pseudo_recall(const std::vector<std::set<std::string>>& per_system,
                     std::size_t system, bool* undefined = nullptr);

struct EvalReport {
  MatchCounts entity_counts;
  MatchCounts relation_counts;
  PRF entity;
  PRF relation;
  PRF coref_muc;
  PRF coref_b_cubed;
  PRF coref_ceaf;
  PRF coref_average;
};

// Pairs documents by doc_key; throws ValidationError if the sets differ.
EvalReport evaluate_documents(const std::vector<Document>& gold,
                              const std::vector<Document>& pred);

std::string report_text(const EvalReport& r);
std::string report_json(const EvalReport& r);

}  // namespace spanie
