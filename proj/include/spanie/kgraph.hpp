#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "spanie/corpus.hpp"
#include "spanie/types.hpp"

namespace spanie {

// Lower-cased, whitespace-collapsed phrase with a record of which
// normalization steps fired. Normalization is idempotent.
struct CanonicalPhrase {
  std::string text;
  bool acronym_expanded = false;
  bool plural_folded = false;
};

// acronym (lower-cased single token) -> expanded phrase (normalized)
using AcronymTable = std::map<std::string, std::string>;

// Folds a regular plural to its singular; irregular scientific plurals
// and a stop-list of mass nouns are handled explicitly.
std::string fold_plural(const std::string& word);

CanonicalPhrase normalize_phrase(const std::string& raw,
                                 const AcronymTable& table);

// Scans "long form ( SHORT )" patterns where SHORT's letters match the
// initials of the preceding words. Keeps the most frequent expansion per
// acronym; ties pick the lexicographically smallest.
AcronymTable build_acronym_table(const std::vector<Document>& docs);

struct CanonicalMention {
  Span span;
  CanonicalPhrase phrase;
  EntityType type = EntityType::Null;
};

// Every predicted entity plus every cluster mention (cluster members
// without a predicted type count as Generic). Within a cluster all
// phrases are replaced by the longest non-Generic member's phrase.
std::vector<CanonicalMention> canonicalize_with_coref(
    const Document& predicted, const AcronymTable& table);

struct NodeSet {
  std::map<std::string, long> nodes;  // phrase -> count after merging
  std::map<std::string, std::string> merged_into;
  std::map<std::string, long> residual;  // discarded phrase -> count
};

// Nodes are phrases with count > threshold; an infrequent phrase merges
// into the longest frequent phrase contained in it at token boundaries.
NodeSet build_nodes(const std::map<std::string, long>& counts,
                    long threshold);

struct EdgeProvenance {
  std::string doc_key;
  int sentence = 0;
};

struct Edge {
  std::string source;
  std::string target;
  RelationType type = RelationType::Null;
  long count = 0;
  bool marked = false;
  std::vector<EdgeProvenance> provenance;
};

using NodePair = std::pair<std::string, std::string>;  // lexicographic order

struct KnowledgeGraph {
  long threshold = 0;
  AcronymTable acronyms;
  std::map<std::string, long> nodes;
  std::map<std::string, std::set<std::string>> node_docs;
  std::map<NodePair, std::vector<Edge>> edges;
  std::map<std::string, long> residual;
  long dropped_relation_instances = 0;
  long dropped_self_loops = 0;

  const Edge* marked_edge(const NodePair& pair) const;
};

struct KgOptions {
  long threshold = 10;
  bool count_per_document = false;
};

// One relation occurrence already mapped onto graph nodes.
struct RelationInstance {
  std::string source;
  std::string target;
  RelationType type = RelationType::Null;
  std::string doc_key;
  int sentence = 0;
};

// Per unordered pair, per (type, direction) counts with the maximal one
// marked; symmetric types collapse both directions. Ties prefer the
// earlier relation type, then the pair-ordered direction.
std::map<NodePair, std::vector<Edge>> build_edges(
    const std::vector<RelationInstance>& instances);

KnowledgeGraph build_graph(const std::vector<Document>& predicted,
                           const KgOptions& opts);

void export_nodes_tsv(const KnowledgeGraph& graph, const std::string& path);
void export_edges_tsv(const KnowledgeGraph& graph, const std::string& path);
void export_graph_json(const KnowledgeGraph& graph, const std::string& path);
void export_residual_report(const KnowledgeGraph& graph,
                            const std::string& path);
KnowledgeGraph load_graph_json(const std::string& path);

struct DocMeta {
  int year = 0;
  std::string venue;
};

// Sidecar records: one JSON object per line with doc_key, year, venue.
std::map<std::string, DocMeta> load_metadata(const std::string& path);

struct TrendPoint {
  int year = 0;
  long with_triple = 0;
  long mentioning = 0;
  double ratio = 0.0;
};

struct TrendSeries {
  std::string term;
  std::string task;
  RelationType type = RelationType::Null;
  bool unknown_term = false;
  bool unknown_task = false;
  std::vector<TrendPoint> points;  // ascending year, only years with data
};

// Per year: papers holding a (term, type, task) edge instance over papers
// mentioning the task node. Queries are normalized with the graph's own
// acronym table. Throws ValidationError if a counted paper lacks metadata.
TrendSeries trend(const KnowledgeGraph& graph, const std::string& term,
                  RelationType type, const std::string& task,
                  const std::map<std::string, DocMeta>& meta);

}  // namespace spanie
