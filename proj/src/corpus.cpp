#include "spanie/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace spanie {

namespace {
using nlohmann::json;
using nlohmann::ordered_json;
}  // namespace

int Document::num_tokens() const {
  int n = 0;
  for (const auto& s : sentences) n += int(s.size());
  return n;
}

std::vector<int> Document::sentence_offsets() const {
  std::vector<int> offsets;
  offsets.reserve(sentences.size() + 1);
  int n = 0;
  for (const auto& s : sentences) {
    offsets.push_back(n);
    n += int(s.size());
  }
  offsets.push_back(n);
  return offsets;
}

int Document::sentence_of(int token) const {
  if (token < 0) return -1;
  int n = 0;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    n += int(sentences[i].size());
    if (token < n) return int(i);
  }
  return -1;
}

const std::string& Document::token(int index) const {
  int n = 0;
  for (const auto& s : sentences) {
    if (index < n + int(s.size())) return s[index - n];
    n += int(s.size());
  }
  throw ValidationError("doc " + doc_key + ": token index out of range: " +
                        std::to_string(index));
}

std::string Document::span_text(const Span& s) const {
  std::string out;
  for (int t = s.start; t <= s.end; ++t) {
    if (t > s.start) out += ' ';
    out += token(t);
  }
  return out;
}

void Document::validate() const {
  const int n = num_tokens();
  auto check_span = [&](const Span& s, const char* what) {
    if (s.start < 0 || s.end >= n || s.start > s.end) {
      throw ValidationError("doc " + doc_key + ": " + what + " span [" +
                            std::to_string(s.start) + "," +
                            std::to_string(s.end) + "] out of range (n=" +
                            std::to_string(n) + ")");
    }
    int sent_a = sentence_of(s.start);
    int sent_b = sentence_of(s.end);
    if (sent_a != sent_b) {
      throw ValidationError("doc " + doc_key + ": " + what + " span [" +
                            std::to_string(s.start) + "," +
                            std::to_string(s.end) +
                            "] crosses a sentence boundary");
    }
    if (s.sentence != sent_a) {
      throw ValidationError("doc " + doc_key + ": " + what +
                            " span has wrong sentence index");
    }
  };

  for (const auto& e : gold_entities) check_span(e.span, "entity");
  for (const auto& r : gold_relations) {
    check_span(r.arg1, "relation");
    check_span(r.arg2, "relation");
    if (r.arg1.sentence != r.arg2.sentence) {
      throw ValidationError("doc " + doc_key +
                            ": relation endpoints lie in different sentences");
    }
    if (r.type == RelationType::Null) {
      throw ValidationError("doc " + doc_key + ": relation with null type");
    }
  }

  std::set<Span> seen;
  for (const auto& cluster : gold_clusters) {
    std::set<Span> members;
    for (const auto& m : cluster) {
      check_span(m, "cluster");
      if (!members.insert(m).second) {
        throw ValidationError("doc " + doc_key +
                              ": duplicate span inside one cluster");
      }
      if (!seen.insert(m).second) {
        throw ValidationError("doc " + doc_key +
                              ": span appears in more than one cluster");
      }
    }
  }
}

namespace {

// Attaches the sentence index and validates boundaries through
// Document::validate() later; here we only resolve the index.
Span make_span(const Document& doc, int start, int end) {
  Span s{start, end, 0};
  s.sentence = doc.sentence_of(start);
  if (s.sentence < 0) s.sentence = 0;
  return s;
}

Document document_from_json(const json& j, const std::string& where) {
  Document doc;
  try {
    doc.doc_key = j.at("doc_key").get<std::string>();
    doc.sentences = j.at("sentences")
                        .get<std::vector<std::vector<std::string>>>();

    if (j.contains("ner")) {
      const auto& ner = j.at("ner");
      for (const auto& sent : ner) {
        for (const auto& ent : sent) {
          if (!ent.is_array() || ent.size() != 3) {
            throw ParseError(where + ": ner entry is not [start, end, label]");
          }
          GoldEntity e;
          e.span = make_span(doc, ent[0].get<int>(), ent[1].get<int>());
          e.type = parse_entity_type(ent[2].get<std::string>());
          doc.gold_entities.push_back(e);
        }
      }
    }
    if (j.contains("relations")) {
      for (const auto& sent : j.at("relations")) {
        for (const auto& rel : sent) {
          if (!rel.is_array() || rel.size() != 5) {
            throw ParseError(where +
                             ": relation entry is not [s1, e1, s2, e2, label]");
          }
          GoldRelation r;
          r.arg1 = make_span(doc, rel[0].get<int>(), rel[1].get<int>());
          r.arg2 = make_span(doc, rel[2].get<int>(), rel[3].get<int>());
          r.type = parse_relation_type(rel[4].get<std::string>());
          doc.gold_relations.push_back(r);
        }
      }
    }
    if (j.contains("clusters")) {
      for (const auto& cluster : j.at("clusters")) {
        std::vector<Span> members;
        for (const auto& m : cluster) {
          if (!m.is_array() || m.size() != 2) {
            throw ParseError(where + ": cluster mention is not [start, end]");
          }
          members.push_back(make_span(doc, m[0].get<int>(), m[1].get<int>()));
        }
        doc.gold_clusters.push_back(std::move(members));
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(where + ": " + e.what());
  }
  doc.validate();
  return doc;
}

}  // namespace

std::vector<Document> parse_documents(std::istream& in,
                                      const std::string& source_name) {
  std::vector<Document> docs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string where = source_name + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
    docs.push_back(document_from_json(j, where));
  }
  return docs;
}

std::vector<Document> load_documents(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file: " + path);
  return parse_documents(in, path);
}

std::string document_to_json(const Document& doc) {
  ordered_json j;
  j["doc_key"] = doc.doc_key;
  j["sentences"] = doc.sentences;

  const std::size_t num_sents = doc.sentences.size();
  std::vector<ordered_json> ner(num_sents, ordered_json::array());
  for (const auto& e : doc.gold_entities) {
    ner[e.span.sentence].push_back(
        ordered_json::array({e.span.start, e.span.end, to_string(e.type)}));
  }
  j["ner"] = ner;

  std::vector<ordered_json> rels(num_sents, ordered_json::array());
  for (const auto& r : doc.gold_relations) {
    rels[r.arg1.sentence].push_back(ordered_json::array(
        {r.arg1.start, r.arg1.end, r.arg2.start, r.arg2.end,
         to_string(r.type)}));
  }
  j["relations"] = rels;

  ordered_json clusters = ordered_json::array();
  for (const auto& cluster : doc.gold_clusters) {
    ordered_json c = ordered_json::array();
    for (const auto& m : cluster) {
      c.push_back(ordered_json::array({m.start, m.end}));
    }
    clusters.push_back(c);
  }
  j["clusters"] = clusters;
  return j.dump();
}

void save_documents(const std::vector<Document>& docs,
                    const std::string& path) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write: " + tmp);
    for (const auto& doc : docs) out << document_to_json(doc) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

GoldAssignment derive_gold(const Document& doc,
                           const std::vector<Span>& spans) {
  GoldAssignment gold;
  gold.entity_target.assign(spans.size(), EntityType::Null);
  gold.antecedent_sets.assign(spans.size(), {});

  std::unordered_map<Span, int, SpanHash> index;
  for (std::size_t i = 0; i < spans.size(); ++i) index[spans[i]] = int(i);

  auto find = [&](const Span& s) {
    auto it = index.find(s);
    return it == index.end() ? -1 : it->second;
  };

  for (const auto& e : doc.gold_entities) {
    int pos = find(e.span);
    if (pos < 0) {
      ++gold.dropped_entities;
      continue;
    }
    EntityType& slot = gold.entity_target[pos];
    if (slot != EntityType::Null && slot != e.type) {
      throw ValidationError("doc " + doc.doc_key + ": span [" +
                            std::to_string(e.span.start) + "," +
                            std::to_string(e.span.end) +
                            "] carries two gold entity types");
    }
    slot = e.type;
  }

  for (const auto& r : doc.gold_relations) {
    int a = find(r.arg1);
    int b = find(r.arg2);
    if (a < 0 || b < 0) {
      ++gold.dropped_relations;
      continue;
    }
    auto key = std::make_pair(a, b);
    auto it = gold.relation_target.find(key);
    if (it != gold.relation_target.end() && it->second != r.type) {
      throw ValidationError("doc " + doc.doc_key +
                            ": ordered span pair carries two gold relation "
                            "types");
    }
    gold.relation_target[key] = r.type;
  }

  for (const auto& cluster : doc.gold_clusters) {
    std::vector<int> members;
    for (const auto& m : cluster) {
      int pos = find(m);
      if (pos < 0) {
        ++gold.dropped_mentions;
        continue;
      }
      members.push_back(pos);
    }
    std::sort(members.begin(), members.end());
    for (std::size_t k = 1; k < members.size(); ++k) {
      gold.antecedent_sets[members[k]] =
          std::vector<int>(members.begin(), members.begin() + k);
    }
  }
  return gold;
}

CorpusStats corpus_stats(const std::vector<Document>& docs) {
  CorpusStats stats;
  stats.documents = docs.size();
  for (const auto& doc : docs) {
    stats.entities += doc.gold_entities.size();
    stats.relations += doc.gold_relations.size();
    stats.coref_clusters += doc.gold_clusters.size();
    for (const auto& cluster : doc.gold_clusters) {
      if (!cluster.empty()) stats.coref_links += cluster.size() - 1;
    }
  }
  if (docs.empty()) {
    stats.empty_corpus = true;
    stats.relations_per_doc = 0.0;
  } else {
    stats.relations_per_doc = double(stats.relations) / double(docs.size());
  }
  return stats;
}

}  // namespace spanie
