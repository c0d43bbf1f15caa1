#include "spanie/kgraph.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace spanie {

namespace {

const std::set<std::string>& plural_stop_list() {
  static const std::set<std::string> kStop = {
      "data",    "news",   "series", "species", "bias",    "corpus",
      "consensus", "focus", "status", "analysis", "basis",  "axis",
      "semantics", "statistics", "physics", "dynamics", "linguistics",
      "this",    "its",    "is",     "as",      "was",     "has",
      "thus",    "various", "previous", "numerous"};
  return kStop;
}

const std::map<std::string, std::string>& irregular_plurals() {
  static const std::map<std::string, std::string> kIrregular = {
      {"analyses", "analysis"},     {"hypotheses", "hypothesis"},
      {"theses", "thesis"},         {"parentheses", "parenthesis"},
      {"syntheses", "synthesis"},   {"bases", "basis"},
      {"axes", "axis"},             {"indices", "index"},
      {"matrices", "matrix"},       {"vertices", "vertex"},
      {"corpora", "corpus"},        {"criteria", "criterion"},
      {"phenomena", "phenomenon"},  {"taxa", "taxon"},
      {"people", "person"},         {"children", "child"}};
  return kIrregular;
}

// Plurals whose singular ends in "s", so only "es" comes off.
const std::set<std::string>& es_plurals() {
  static const std::set<std::string> kEs = {
      "biases",   "aliases",  "atlases",  "canvases", "gases",
      "lenses",   "buses",    "viruses",  "bonuses",  "corpuses",
      "statuses", "consensuses", "focuses", "classes"};
  return kEs;
}

bool ends_with(const std::string& s, const char* suffix) {
  std::size_t n = std::strlen(suffix);
  return s.size() >= n && s.compare(s.size() - n, n, suffix) == 0;
}

}  // namespace

std::string fold_plural(const std::string& word) {
  if (word.size() <= 3) return word;
  if (plural_stop_list().count(word)) return word;
  auto irr = irregular_plurals().find(word);
  if (irr != irregular_plurals().end()) return irr->second;
  if (ends_with(word, "ies") && word.size() > 4) {
    return word.substr(0, word.size() - 3) + "y";
  }
  if (ends_with(word, "sses") || ends_with(word, "ches") ||
      ends_with(word, "shes") || ends_with(word, "xes") ||
      ends_with(word, "zes") || es_plurals().count(word)) {
    return word.substr(0, word.size() - 2);
  }
  if (ends_with(word, "ss") || ends_with(word, "us") ||
      ends_with(word, "is")) {
    return word;
  }
  if (word.back() == 's') return word.substr(0, word.size() - 1);
  return word;
}

namespace {

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::string lower(std::string s) {
  for (char& c : s) c = char(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

CanonicalPhrase normalize_phrase(const std::string& raw,
                                 const AcronymTable& table) {
  CanonicalPhrase out;
  std::vector<std::string> tokens = split_ws(lower(raw));
  if (tokens.empty()) return out;
  if (tokens.size() == 1) {
    // try the folded form too, so a pluralized acronym still expands
    // and normalization stays idempotent
    std::string folded_token = fold_plural(tokens[0]);
    auto it = table.find(tokens[0]);
    if (it == table.end() && folded_token != tokens[0]) {
      it = table.find(folded_token);
      if (it != table.end()) out.plural_folded = true;
    }
    if (it != table.end()) {
      out.text = it->second;  // expansions are stored normalized
      out.acronym_expanded = true;
      return out;
    }
  }
  std::string folded = fold_plural(tokens.back());
  out.plural_folded = folded != tokens.back();
  tokens.back() = std::move(folded);
  out.text = join(tokens);
  return out;
}

namespace {

std::string letters_of(const std::string& token) {
  std::string out;
  for (char c : token) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      out += char(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  return out;
}

}  // namespace

AcronymTable build_acronym_table(const std::vector<Document>& docs) {
  // (acronym, expansion) -> occurrence count
  std::map<std::pair<std::string, std::string>, long> counts;
  for (const auto& doc : docs) {
    for (const auto& sent : doc.sentences) {
      for (std::size_t t = 0; t + 2 < sent.size(); ++t) {
        if (sent[t] != "(" || sent[t + 2] != ")") continue;
        std::string letters = letters_of(sent[t + 1]);
        if (letters.size() < 2 || letters.size() > t) continue;
        std::size_t k = letters.size();
        bool match = true;
        std::vector<std::string> long_form;
        for (std::size_t w = 0; w < k; ++w) {
          const std::string& word = sent[t - k + w];
          std::string wl = letters_of(word);
          if (wl.empty() || wl[0] != letters[w]) {
            match = false;
            break;
          }
          long_form.push_back(word);
        }
        if (!match) continue;
        CanonicalPhrase expansion = normalize_phrase(join(long_form), {});
        ++counts[{lower(sent[t + 1]), expansion.text}];
      }
    }
  }
  AcronymTable table;
  std::map<std::string, std::pair<long, std::string>> best;
  for (const auto& [key, count] : counts) {
    const auto& [acro, expansion] = key;
    auto it = best.find(acro);
    if (it == best.end() || count > it->second.first ||
        (count == it->second.first && expansion < it->second.second)) {
      best[acro] = {count, expansion};
    }
  }
  for (const auto& [acro, entry] : best) table[acro] = entry.second;
  return table;
}

std::vector<CanonicalMention> canonicalize_with_coref(
    const Document& predicted, const AcronymTable& table) {
  std::map<Span, EntityType> type_of;
  for (const auto& e : predicted.gold_entities) type_of[e.span] = e.type;
  for (const auto& cluster : predicted.gold_clusters) {
    for (const auto& m : cluster) type_of.emplace(m, EntityType::Generic);
  }

  std::map<Span, CanonicalPhrase> phrase_of;
  for (const auto& [span, type] : type_of) {
    phrase_of[span] = normalize_phrase(predicted.span_text(span), table);
  }

  for (const auto& cluster : predicted.gold_clusters) {
    const Span* best = nullptr;
    for (const auto& m : cluster) {
      if (type_of.at(m) == EntityType::Generic) continue;
      if (best == nullptr) {
        best = &m;
        continue;
      }
      const auto& cand = phrase_of.at(m).text;
      const auto& cur = phrase_of.at(*best).text;
      if (cand.size() > cur.size() ||
          (cand.size() == cur.size() && cand < cur)) {
        best = &m;
      }
    }
    if (best == nullptr) continue;
    CanonicalPhrase replacement = phrase_of.at(*best);
    for (const auto& m : cluster) phrase_of[m] = replacement;
  }

  std::vector<CanonicalMention> out;
  out.reserve(type_of.size());
  for (const auto& [span, type] : type_of) {
    out.push_back({span, phrase_of.at(span), type});
  }
  return out;
}

namespace {

bool contains_at_token_boundary(const std::vector<std::string>& haystack,
                                const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > haystack.size()) return false;
  for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
    if (std::equal(needle.begin(), needle.end(), haystack.begin() + i)) {
      return true;
    }
  }
  return false;
}

}  // namespace

NodeSet build_nodes(const std::map<std::string, long>& counts,
                    long threshold) {
  NodeSet out;
  for (const auto& [phrase, count] : counts) {
    if (count > threshold) out.nodes[phrase] = count;
  }
  for (const auto& [phrase, count] : counts) {
    if (out.nodes.count(phrase)) continue;
    std::vector<std::string> tokens = split_ws(phrase);
    const std::string* target = nullptr;
    for (const auto& [node, node_count] : out.nodes) {
      (void)node_count;
      if (!contains_at_token_boundary(tokens, split_ws(node))) continue;
      if (target == nullptr || node.size() > target->size() ||
          (node.size() == target->size() && node < *target)) {
        target = &node;
      }
    }
    if (target != nullptr) {
      out.merged_into[phrase] = *target;
      out.nodes[*target] += count;
    } else {
      out.residual[phrase] = count;
    }
  }
  return out;
}

std::map<NodePair, std::vector<Edge>> build_edges(
    const std::vector<RelationInstance>& instances) {
  struct Accum {
    long count = 0;
    std::vector<EdgeProvenance> provenance;
  };
  // pair -> (type, source-is-second flag) -> accumulated counts
  std::map<NodePair, std::map<std::pair<RelationType, int>, Accum>> grouped;
  for (const auto& inst : instances) {
    NodePair pair{std::min(inst.source, inst.target),
                  std::max(inst.source, inst.target)};
    int reversed = 0;
    if (!is_symmetric(inst.type) && inst.source != pair.first) reversed = 1;
    Accum& acc = grouped[pair][{inst.type, reversed}];
    ++acc.count;
    acc.provenance.push_back({inst.doc_key, inst.sentence});
  }

  std::map<NodePair, std::vector<Edge>> out;
  for (auto& [pair, by_type] : grouped) {
    std::vector<Edge>& edges = out[pair];
    long best = 0;
    for (const auto& [key, acc] : by_type) best = std::max(best, acc.count);
    bool marked_done = false;
    for (auto& [key, acc] : by_type) {
      Edge e;
      e.source = key.second == 0 ? pair.first : pair.second;
      e.target = key.second == 0 ? pair.second : pair.first;
      e.type = key.first;
      e.count = acc.count;
      // canonical order so the graph is independent of document order
      std::sort(acc.provenance.begin(), acc.provenance.end(),
                [](const EdgeProvenance& a, const EdgeProvenance& b) {
                  if (a.doc_key != b.doc_key) return a.doc_key < b.doc_key;
                  return a.sentence < b.sentence;
                });
      e.provenance = std::move(acc.provenance);
      // map order is (type, direction), so the first maximal entry wins
      if (!marked_done && acc.count == best) {
        e.marked = true;
        marked_done = true;
      }
      edges.push_back(std::move(e));
    }
  }
  return out;
}

const Edge* KnowledgeGraph::marked_edge(const NodePair& pair) const {
  auto it = edges.find(pair);
  if (it == edges.end()) return nullptr;
  for (const auto& e : it->second) {
    if (e.marked) return &e;
  }
  return nullptr;
}

KnowledgeGraph build_graph(const std::vector<Document>& predicted,
                           const KgOptions& opts) {
  KnowledgeGraph graph;
  graph.threshold = opts.threshold;
  graph.acronyms = build_acronym_table(predicted);

  std::vector<std::vector<CanonicalMention>> mentions;
  mentions.reserve(predicted.size());
  std::map<std::string, long> counts;
  for (const auto& doc : predicted) {
    mentions.push_back(canonicalize_with_coref(doc, graph.acronyms));
    if (opts.count_per_document) {
      std::set<std::string> distinct;
      for (const auto& m : mentions.back()) distinct.insert(m.phrase.text);
      for (const auto& p : distinct) ++counts[p];
    } else {
      for (const auto& m : mentions.back()) ++counts[m.phrase.text];
    }
  }

  NodeSet nodes = build_nodes(counts, opts.threshold);
  graph.nodes = nodes.nodes;
  graph.residual = nodes.residual;

  auto node_of = [&nodes](const std::string& phrase) -> const std::string* {
    if (nodes.nodes.count(phrase)) return &nodes.nodes.find(phrase)->first;
    auto it = nodes.merged_into.find(phrase);
    if (it != nodes.merged_into.end()) return &it->second;
    return nullptr;
  };

  std::vector<RelationInstance> instances;
  for (std::size_t d = 0; d < predicted.size(); ++d) {
    const Document& doc = predicted[d];
    std::map<Span, const CanonicalMention*> by_span;
    for (const auto& m : mentions[d]) by_span[m.span] = &m;

    for (const auto& m : mentions[d]) {
      const std::string* node = node_of(m.phrase.text);
      if (node != nullptr) graph.node_docs[*node].insert(doc.doc_key);
    }

    for (const auto& rel : doc.gold_relations) {
      auto phrase_for = [&](const Span& s) {
        auto it = by_span.find(s);
        if (it != by_span.end()) return it->second->phrase.text;
        return normalize_phrase(doc.span_text(s), graph.acronyms).text;
      };
      const std::string* a = node_of(phrase_for(rel.arg1));
      const std::string* b = node_of(phrase_for(rel.arg2));
      if (a == nullptr || b == nullptr) {
        ++graph.dropped_relation_instances;
        continue;
      }
      if (*a == *b) {
        ++graph.dropped_self_loops;
        continue;
      }
      instances.push_back(
          {*a, *b, rel.type, doc.doc_key, rel.arg1.sentence});
      graph.node_docs[*a].insert(doc.doc_key);
      graph.node_docs[*b].insert(doc.doc_key);
    }
  }
  graph.edges = build_edges(instances);
  return graph;
}

namespace {

void atomic_write(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write: " + tmp);
    out << content;
    if (!out) throw IoError("failed while writing: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

const char* direction_name(const Edge& e, const NodePair& pair) {
  if (is_symmetric(e.type)) return "symmetric";
  return e.source == pair.first ? "forward" : "reverse";
}

}  // namespace

void export_nodes_tsv(const KnowledgeGraph& graph, const std::string& path) {
  std::ostringstream out;
  out << "phrase\tcount\n";
  for (const auto& [phrase, count] : graph.nodes) {
    out << phrase << '\t' << count << '\n';
  }
  atomic_write(path, out.str());
}

void export_edges_tsv(const KnowledgeGraph& graph, const std::string& path) {
  std::ostringstream out;
  out << "phrase1\tphrase2\trelation\tdirection\tcount\tmarked\n";
  for (const auto& [pair, edges] : graph.edges) {
    for (const auto& e : edges) {
      out << pair.first << '\t' << pair.second << '\t' << to_string(e.type)
          << '\t' << direction_name(e, pair) << '\t' << e.count << '\t'
          << (e.marked ? 1 : 0) << '\n';
    }
  }
  atomic_write(path, out.str());
}

void export_graph_json(const KnowledgeGraph& graph, const std::string& path) {
  nlohmann::ordered_json j;
  j["threshold"] = graph.threshold;
  j["acronyms"] = graph.acronyms;
  j["nodes"] = nlohmann::ordered_json::array();
  for (const auto& [phrase, count] : graph.nodes) {
    nlohmann::ordered_json node;
    node["phrase"] = phrase;
    node["count"] = count;
    auto it = graph.node_docs.find(phrase);
    node["docs"] = it != graph.node_docs.end()
                       ? std::vector<std::string>(it->second.begin(),
                                                  it->second.end())
                       : std::vector<std::string>{};
    j["nodes"].push_back(std::move(node));
  }
  j["edges"] = nlohmann::ordered_json::array();
  for (const auto& [pair, edges] : graph.edges) {
    for (const auto& e : edges) {
      nlohmann::ordered_json edge;
      edge["source"] = e.source;
      edge["target"] = e.target;
      edge["relation"] = to_string(e.type);
      edge["count"] = e.count;
      edge["marked"] = e.marked;
      edge["provenance"] = nlohmann::ordered_json::array();
      for (const auto& p : e.provenance) {
        edge["provenance"].push_back({{"doc_key", p.doc_key},
                                      {"sentence", p.sentence}});
      }
      j["edges"].push_back(std::move(edge));
    }
  }
  j["residual"] = graph.residual;
  j["dropped_relation_instances"] = graph.dropped_relation_instances;
  j["dropped_self_loops"] = graph.dropped_self_loops;
  atomic_write(path, j.dump(2) + "\n");
}

void export_residual_report(const KnowledgeGraph& graph,
                            const std::string& path) {
  std::ostringstream out;
  out << "phrase\tcount\n";
  for (const auto& [phrase, count] : graph.residual) {
    out << phrase << '\t' << count << '\n';
  }
  atomic_write(path, out.str());
}

KnowledgeGraph load_graph_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open graph: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  KnowledgeGraph graph;
  try {
    graph.threshold = j.at("threshold").get<long>();
    graph.acronyms = j.at("acronyms").get<AcronymTable>();
    for (const auto& node : j.at("nodes")) {
      auto phrase = node.at("phrase").get<std::string>();
      graph.nodes[phrase] = node.at("count").get<long>();
      for (const auto& d : node.at("docs")) {
        graph.node_docs[phrase].insert(d.get<std::string>());
      }
    }
    for (const auto& edge : j.at("edges")) {
      Edge e;
      e.source = edge.at("source").get<std::string>();
      e.target = edge.at("target").get<std::string>();
      e.type = parse_relation_type(edge.at("relation").get<std::string>());
      e.count = edge.at("count").get<long>();
      e.marked = edge.at("marked").get<bool>();
      for (const auto& p : edge.at("provenance")) {
        e.provenance.push_back({p.at("doc_key").get<std::string>(),
                                p.at("sentence").get<int>()});
      }
      NodePair pair{std::min(e.source, e.target),
                    std::max(e.source, e.target)};
      graph.edges[pair].push_back(std::move(e));
    }
    graph.residual =
        j.at("residual").get<std::map<std::string, long>>();
    graph.dropped_relation_instances =
        j.at("dropped_relation_instances").get<long>();
    graph.dropped_self_loops = j.at("dropped_self_loops").get<long>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": malformed graph file: " + e.what());
  }
  return graph;
}

std::map<std::string, DocMeta> load_metadata(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open metadata: " + path);
  std::map<std::string, DocMeta> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    try {
      auto key = j.at("doc_key").get<std::string>();
      if (out.count(key)) {
        throw ValidationError(path + ": duplicate doc_key " + key);
      }
      DocMeta meta;
      meta.year = j.at("year").get<int>();
      if (j.contains("venue")) meta.venue = j.at("venue").get<std::string>();
      out[key] = std::move(meta);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

TrendSeries trend(const KnowledgeGraph& graph, const std::string& term,
                  RelationType type, const std::string& task,
                  const std::map<std::string, DocMeta>& meta) {
  TrendSeries series;
  series.term = normalize_phrase(term, graph.acronyms).text;
  series.task = normalize_phrase(task, graph.acronyms).text;
  series.type = type;
  series.unknown_term = graph.nodes.count(series.term) == 0;
  series.unknown_task = graph.nodes.count(series.task) == 0;
  if (series.unknown_term || series.unknown_task) return series;

  std::set<std::string> with_triple;
  NodePair pair{std::min(series.term, series.task),
                std::max(series.term, series.task)};
  auto it = graph.edges.find(pair);
  if (it != graph.edges.end()) {
    for (const auto& e : it->second) {
      if (e.type != type) continue;
      if (!is_symmetric(type) &&
          (e.source != series.term || e.target != series.task)) {
        continue;
      }
      for (const auto& p : e.provenance) with_triple.insert(p.doc_key);
    }
  }

  std::map<int, TrendPoint> by_year;
  auto docs_it = graph.node_docs.find(series.task);
  if (docs_it != graph.node_docs.end()) {
    for (const auto& doc : docs_it->second) {
      auto m = meta.find(doc);
      if (m == meta.end()) {
        throw ValidationError("no metadata for document " + doc);
      }
      TrendPoint& point = by_year[m->second.year];
      point.year = m->second.year;
      ++point.mentioning;
      if (with_triple.count(doc)) ++point.with_triple;
    }
  }
  for (auto& [year, point] : by_year) {
    (void)year;
    point.ratio = double(point.with_triple) / double(point.mentioning);
    series.points.push_back(point);
  }
  return series;
}

}  // namespace spanie
