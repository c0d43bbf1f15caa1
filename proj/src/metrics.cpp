#include "spanie/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

#include <json.hpp>

namespace spanie {

double safe_ratio(double num, double den) {
  return den > 0.0 ? num / den : 0.0;
}

double f1_of(double precision, double recall) {
  double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

MatchCounts& MatchCounts::operator+=(const MatchCounts& o) {
  correct += o.correct;
  predicted += o.predicted;
  gold += o.gold;
  return *this;
}

PRF MatchCounts::to_prf() const {
  PRF r;
  r.precision = safe_ratio(double(correct), double(predicted));
  r.recall = safe_ratio(double(correct), double(gold));
  r.f1 = f1_of(r.precision, r.recall);
  return r;
}

MatchCounts entity_match(const std::vector<GoldEntity>& gold,
                         const std::vector<GoldEntity>& pred) {
  std::set<std::pair<Span, EntityType>> g, p;
  for (const auto& e : gold) g.insert({e.span, e.type});
  for (const auto& e : pred) p.insert({e.span, e.type});
  MatchCounts c;
  c.gold = g.size();
  c.predicted = p.size();
  for (const auto& e : p) c.correct += g.count(e);
  return c;
}

namespace {

std::tuple<Span, Span, RelationType> relation_key(const GoldRelation& r) {
  Span a = r.arg1, b = r.arg2;
  if (is_symmetric(r.type) && b < a) std::swap(a, b);
  return {a, b, r.type};
}

}  // namespace

MatchCounts relation_match(const std::vector<GoldRelation>& gold,
                           const std::vector<GoldRelation>& pred) {
  std::set<std::tuple<Span, Span, RelationType>> g, p;
  for (const auto& r : gold) g.insert(relation_key(r));
  for (const auto& r : pred) p.insert(relation_key(r));
  MatchCounts c;
  c.gold = g.size();
  c.predicted = p.size();
  for (const auto& r : p) c.correct += g.count(r);
  return c;
}

RatioCounts& RatioCounts::operator+=(const RatioCounts& o) {
  recall_num += o.recall_num;
  recall_den += o.recall_den;
  precision_num += o.precision_num;
  precision_den += o.precision_den;
  return *this;
}

PRF RatioCounts::to_prf() const {
  PRF r;
  r.precision = safe_ratio(precision_num, precision_den);
  r.recall = safe_ratio(recall_num, recall_den);
  r.f1 = f1_of(r.precision, r.recall);
  return r;
}

namespace {

void validate_clusters(const Clusters& clusters, const char* which) {
  for (const auto& cluster : clusters) {
    std::set<Span> seen;
    for (const auto& m : cluster) {
      if (!seen.insert(m).second) {
        throw ValidationError(std::string(which) +
                              " cluster repeats a mention");
      }
    }
  }
}

std::map<Span, int> mention_owner(const Clusters& clusters) {
  std::map<Span, int> owner;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (const auto& m : clusters[c]) owner[m] = int(c);
  }
  return owner;
}

// Links in a key cluster recovered by the response partition: the key
// cluster splits into the response clusters it touches, with every
// uncovered mention its own part.
double muc_side(const Clusters& key, const Clusters& response,
                double& denominator) {
  auto owner = mention_owner(response);
  double numerator = 0.0;
  for (const auto& cluster : key) {
    std::set<int> parts;
    int uncovered = 0;
    for (const auto& m : cluster) {
      auto it = owner.find(m);
      if (it == owner.end()) {
        ++uncovered;
      } else {
        parts.insert(it->second);
      }
    }
    numerator += double(cluster.size()) - double(parts.size() + uncovered);
    denominator += double(cluster.size()) - 1.0;
  }
  return numerator;
}

double b_cubed_side(const Clusters& key, const Clusters& response,
                    double& denominator) {
  double numerator = 0.0;
  for (const auto& kc : key) {
    std::set<Span> kset(kc.begin(), kc.end());
    for (const auto& rc : response) {
      std::size_t overlap = 0;
      for (const auto& m : rc) overlap += kset.count(m);
      numerator += double(overlap) * double(overlap) / double(kc.size());
    }
    denominator += double(kc.size());
  }
  return numerator;
}

double phi4(const std::vector<Span>& g, const std::vector<Span>& p) {
  std::set<Span> gs(g.begin(), g.end());
  std::size_t overlap = 0;
  for (const auto& m : p) overlap += gs.count(m);
  return 2.0 * double(overlap) / double(g.size() + p.size());
}

}  // namespace

RatioCounts muc_counts(const Clusters& gold, const Clusters& pred) {
  validate_clusters(gold, "gold");
  validate_clusters(pred, "predicted");
  RatioCounts c;
  c.recall_num = muc_side(gold, pred, c.recall_den);
  c.precision_num = muc_side(pred, gold, c.precision_den);
  return c;
}

RatioCounts b_cubed_counts(const Clusters& gold, const Clusters& pred) {
  validate_clusters(gold, "gold");
  validate_clusters(pred, "predicted");
  RatioCounts c;
  c.recall_num = b_cubed_side(gold, pred, c.recall_den);
  c.precision_num = b_cubed_side(pred, gold, c.precision_den);
  return c;
}

RatioCounts ceaf_phi4_counts(const Clusters& gold, const Clusters& pred) {
  validate_clusters(gold, "gold");
  validate_clusters(pred, "predicted");
  RatioCounts c;
  c.recall_den = double(gold.size());
  c.precision_den = double(pred.size());
  if (gold.empty() || pred.empty()) return c;
  std::vector<std::vector<double>> sim(gold.size(),
                                       std::vector<double>(pred.size()));
  for (std::size_t i = 0; i < gold.size(); ++i) {
    for (std::size_t j = 0; j < pred.size(); ++j) {
      sim[i][j] = phi4(gold[i], pred[j]);
    }
  }
  double total = optimal_alignment_score(sim);
  c.recall_num = total;
  c.precision_num = total;
  return c;
}

PRF muc(const Clusters& gold, const Clusters& pred) {
  return muc_counts(gold, pred).to_prf();
}
PRF b_cubed(const Clusters& gold, const Clusters& pred) {
  return b_cubed_counts(gold, pred).to_prf();
}
PRF ceaf_phi4(const Clusters& gold, const Clusters& pred) {
  return ceaf_phi4_counts(gold, pred).to_prf();
}

PRF average_prf(const std::vector<PRF>& parts) {
  PRF out;
  if (parts.empty()) return out;
  for (const auto& p : parts) {
    out.precision += p.precision;
    out.recall += p.recall;
    out.f1 += p.f1;
  }
  out.precision /= double(parts.size());
  out.recall /= double(parts.size());
  out.f1 /= double(parts.size());
  return out;
}

PRF coref_avg(const Clusters& gold, const Clusters& pred) {
  return average_prf(
      {muc(gold, pred), b_cubed(gold, pred), ceaf_phi4(gold, pred)});
}

double optimal_alignment_score(const std::vector<std::vector<double>>& sim) {
  if (sim.empty() || sim[0].empty()) return 0.0;
  const int rows = int(sim.size());
  const int cols = int(sim[0].size());
  const int n = std::max(rows, cols);
  const double kInf = std::numeric_limits<double>::infinity();

  // Minimum-cost square assignment on negated similarities, padded with
  // zeros, via shortest augmenting paths with potentials.
  std::vector<std::vector<double>> a(n + 1, std::vector<double>(n + 1, 0.0));
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) a[i + 1][j + 1] = -sim[i][j];
  }
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = a[i0][j] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  for (int j = 1; j <= n; ++j) total += a[p[j]][j];
  return -total;
}

double bruteforce_alignment_score(const std::vector<std::vector<double>>& sim) {
  if (sim.empty() || sim[0].empty()) return 0.0;
  const int rows = int(sim.size());
  const int cols = int(sim[0].size());
  if (rows <= cols) {
    std::vector<int> perm(cols);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 0.0;
    do {
      double total = 0.0;
      for (int i = 0; i < rows; ++i) total += sim[i][perm[i]];
      best = std::max(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
  }
  std::vector<std::vector<double>> t(cols, std::vector<double>(rows));
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) t[j][i] = sim[i][j];
  }
  return bruteforce_alignment_score(t);
}

double pseudo_recall(const std::vector<std::set<std::string>>& per_system,
                     std::size_t system, bool* undefined) {
  if (system >= per_system.size()) {
    throw ValidationError("pseudo-recall: no such system");
  }
  std::set<std::string> pooled;
  for (const auto& s : per_system) pooled.insert(s.begin(), s.end());
  if (undefined != nullptr) *undefined = pooled.empty();
  if (pooled.empty()) return 0.0;
  return double(per_system[system].size()) / double(pooled.size());
}

EvalReport evaluate_documents(const std::vector<Document>& gold,
                              const std::vector<Document>& pred) {
  std::map<std::string, const Document*> by_key;
  for (const auto& d : pred) by_key[d.doc_key] = &d;
  if (by_key.size() != pred.size()) {
    throw ValidationError("predictions repeat a doc_key");
  }
  if (gold.size() != pred.size()) {
    throw ValidationError("gold and predictions cover different documents");
  }

  EvalReport r;
  RatioCounts muc_total, b3_total, ceaf_total;
  for (const auto& g : gold) {
    auto it = by_key.find(g.doc_key);
    if (it == by_key.end()) {
      throw ValidationError("no prediction for document " + g.doc_key);
    }
    const Document& p = *it->second;
    r.entity_counts += entity_match(g.gold_entities, p.gold_entities);
    r.relation_counts += relation_match(g.gold_relations, p.gold_relations);
    muc_total += muc_counts(g.gold_clusters, p.gold_clusters);
    b3_total += b_cubed_counts(g.gold_clusters, p.gold_clusters);
    ceaf_total += ceaf_phi4_counts(g.gold_clusters, p.gold_clusters);
  }
  r.entity = r.entity_counts.to_prf();
  r.relation = r.relation_counts.to_prf();
  r.coref_muc = muc_total.to_prf();
  r.coref_b_cubed = b3_total.to_prf();
  r.coref_ceaf = ceaf_total.to_prf();
  r.coref_average =
      average_prf({r.coref_muc, r.coref_b_cubed, r.coref_ceaf});
  return r;
}

PRF entity_prf(const std::vector<Document>& gold,
               const std::vector<Document>& pred) {
  return evaluate_documents(gold, pred).entity;
}

PRF relation_prf(const std::vector<Document>& gold,
                 const std::vector<Document>& pred) {
  return evaluate_documents(gold, pred).relation;
}

namespace {

void report_line(std::ostream& out, const char* name, const PRF& p) {
  out << name << '\t' << p.precision << '\t' << p.recall << '\t' << p.f1
      << '\n';
}

nlohmann::ordered_json prf_json(const PRF& p) {
  return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
}

}  // namespace

std::string report_text(const EvalReport& r) {
  std::ostringstream out;
  out << "task\tprecision\trecall\tf1\n";
  report_line(out, "entity", r.entity);
  report_line(out, "relation", r.relation);
  report_line(out, "coref_muc", r.coref_muc);
  report_line(out, "coref_b_cubed", r.coref_b_cubed);
  report_line(out, "coref_ceaf_phi4", r.coref_ceaf);
  report_line(out, "coref_average", r.coref_average);
  return out.str();
}

std::string report_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["entity"] = prf_json(r.entity);
  j["entity"]["correct"] = r.entity_counts.correct;
  j["entity"]["predicted"] = r.entity_counts.predicted;
  j["entity"]["gold"] = r.entity_counts.gold;
  j["relation"] = prf_json(r.relation);
  j["relation"]["correct"] = r.relation_counts.correct;
  j["relation"]["predicted"] = r.relation_counts.predicted;
  j["relation"]["gold"] = r.relation_counts.gold;
  j["coref"] = {{"muc", prf_json(r.coref_muc)},
                {"b_cubed", prf_json(r.coref_b_cubed)},
                {"ceaf_phi4", prf_json(r.coref_ceaf)},
                {"average", prf_json(r.coref_average)}};
  return j.dump(2) + "\n";
}

}  // namespace spanie
