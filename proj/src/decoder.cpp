#include "spanie/decoder.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

namespace spanie {

namespace {

// Index of the best entry; the null entry at index 0 wins ties so an
// untrained model predicts nothing rather than everything.
int argmax_label(const nn::Matrix& logprob) {
  int best = 0;
  for (int i = 1; i < logprob.rows(); ++i) {
    if (logprob(i, 0) > logprob(best, 0)) best = i;
  }
  return best;
}

struct UnionFind {
  std::vector<int> parent;

  explicit UnionFind(int n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

std::vector<GoldEntity> decode_entities(const nn::Graph& g,
                                        const DocumentScores& scores) {
  std::vector<GoldEntity> out;
  for (int i = 0; i < scores.space.size(); ++i) {
    int label = argmax_label(g.value(scores.entity_logprob[i]));
    if (label == 0) continue;
    out.push_back({scores.space.spans[i], EntityType(label)});
  }
  return out;
}

std::vector<GoldRelation> decode_relations(const nn::Graph& g,
                                           const DocumentScores& scores) {
  std::set<std::tuple<Span, Span, RelationType>> seen;
  std::vector<GoldRelation> out;
  for (std::size_t p = 0; p < scores.relation_pairs.size(); ++p) {
    int label = argmax_label(g.value(scores.relation_logprob[p]));
    if (label == 0) continue;
    auto type = RelationType(label);
    Span a = scores.space.spans[scores.relation_pairs[p].first];
    Span b = scores.space.spans[scores.relation_pairs[p].second];
    if (is_symmetric(type) && b < a) std::swap(a, b);
    if (!seen.insert({a, b, type}).second) continue;
    out.push_back({a, b, type});
  }
  return out;
}

std::vector<std::vector<Span>> decode_coref(const nn::Graph& g,
                                            const DocumentScores& scores) {
  const auto& members = scores.coref_beam.members;
  UnionFind uf(int(members.size()));
  for (std::size_t k = 0; k < members.size(); ++k) {
    int choice = argmax_label(g.value(scores.coref_logprob[k]));
    if (choice == 0) continue;
    int antecedent_pos = scores.coref_candidates[k][choice - 1];
    auto it = std::find(members.begin(), members.end(), antecedent_pos);
    uf.unite(int(k), int(it - members.begin()));
  }

  std::map<int, std::vector<Span>> groups;
  for (std::size_t k = 0; k < members.size(); ++k) {
    groups[uf.find(int(k))].push_back(scores.space.spans[members[k]]);
  }
  std::vector<std::vector<Span>> clusters;
  for (auto& [root, spans] : groups) {
    if (spans.size() < 2) continue;
    std::sort(spans.begin(), spans.end());
    clusters.push_back(std::move(spans));
  }
  std::sort(clusters.begin(), clusters.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return clusters;
}

Prediction decode(const nn::Graph& g, const DocumentScores& scores) {
  return {decode_entities(g, scores), decode_relations(g, scores),
          decode_coref(g, scores)};
}

Document prediction_to_document(const Document& doc, const Prediction& pred) {
  Document out;
  out.doc_key = doc.doc_key;
  out.sentences = doc.sentences;
  out.gold_entities = pred.entities;
  out.gold_relations = pred.relations;
  out.gold_clusters = pred.clusters;
  return out;
}

}  // namespace spanie
