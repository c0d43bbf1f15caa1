#include "spanie/model.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace spanie {

using nn::Graph;
using nn::Matrix;
using nn::Var;

Model Model::create(Config cfg, Vocabulary vocab, int context_dim) {
  cfg.validate();
  Model m;
  m.cfg_ = std::move(cfg);
  m.vocab_ = std::move(vocab);
  std::mt19937_64 rng(m.cfg_.seed);
  m.enc_ = EncoderParams::create(m.store_, m.cfg_, m.vocab_, context_dim, rng);
  m.scorer_ = ScorerParams::create(m.store_, m.cfg_, m.enc_.span_dim, rng);
  return m;
}

namespace {

// Column vector whose every entry equals the given scalar node.
Var broadcast(Graph& g, Var scalar, int rows) {
  return g.matmul(g.constant(Matrix::Ones(rows, 1)), scalar);
}

Var with_null(Graph& g, Var scores) {
  return g.concat_rows({g.zeros(1), scores});
}

}  // namespace

DocumentScores Model::forward(Graph& g, const Document& doc,
                              const ContextStore* context, bool training,
                              std::mt19937_64* rng) const {
  DocumentScores out;
  EncodeMode mode{training, rng};
  EncodedTokens tokens = encode_tokens(g, doc, enc_, vocab_, context, mode);

  out.space = enumerate_spans(doc, cfg_.max_span_width);
  const int n_spans = out.space.size();
  out.span_reps.resize(n_spans);
  out.entity_logprob.resize(n_spans);
  out.mention_relation.resize(n_spans);
  out.mention_coref.resize(n_spans);

  std::vector<Var> phi_mr(n_spans), phi_mc(n_spans);
  for (int i = 0; i < n_spans; ++i) {
    Var rep = span_representation(g, out.space.spans[i], tokens, enc_);
    out.span_reps[i] = rep;
    Var ent = scorer_.entity.apply(g, rep, scorer_.dropout, training, rng);
    out.entity_logprob[i] = g.log_softmax(with_null(g, ent));
    phi_mr[i] =
        scorer_.mention_relation.apply(g, rep, scorer_.dropout, training, rng);
    phi_mc[i] =
        scorer_.mention_coref.apply(g, rep, scorer_.dropout, training, rng);
    out.mention_relation[i] = g.scalar(phi_mr[i]);
    out.mention_coref[i] = g.scalar(phi_mc[i]);
  }

  const int n_tokens = doc.num_tokens();
  out.coref_beam = prune(out.space, out.mention_coref, cfg_.beam_coref,
                         n_tokens, BeamKind::Coref);
  out.relation_beam = prune(out.space, out.mention_relation,
                            cfg_.beam_relation, n_tokens, BeamKind::Relation);

  out.relation_pairs = pair_candidates(out.space, out.relation_beam);
  out.relation_logprob.reserve(out.relation_pairs.size());
  for (const auto& [i, j] : out.relation_pairs) {
    Var pair = scorer_.relation_pair.apply(
        g, pair_input(g, out.span_reps[i], out.span_reps[j]), scorer_.dropout,
        training, rng);
    Var unary = g.add(phi_mr[i], phi_mr[j]);
    Var total = g.add(pair, broadcast(g, unary, kNumRelationTypes - 1));
    out.relation_logprob.push_back(g.log_softmax(with_null(g, total)));
  }

  const auto& members = out.coref_beam.members;
  out.coref_candidates.resize(members.size());
  out.coref_logprob.reserve(members.size());
  for (std::size_t k = 0; k < members.size(); ++k) {
    std::vector<Var> scores;
    scores.reserve(k + 1);
    scores.push_back(g.zeros(1));
    for (std::size_t c = 0; c < k; ++c) {
      out.coref_candidates[k].push_back(members[c]);
      Var pair = scorer_.coref_pair.apply(
          g, pair_input(g, out.span_reps[members[c]],
                        out.span_reps[members[k]]),
          scorer_.dropout, training, rng);
      scores.push_back(
          g.add_n({phi_mc[members[c]], phi_mc[members[k]], pair}));
    }
    out.coref_logprob.push_back(g.log_softmax(g.concat_rows(scores)));
  }
  return out;
}

namespace {

constexpr char kMagic[8] = {'s', 'p', 'a', 'n', 'i', 'e', '0', '1'};

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, std::uint32_t(s.size()));
  out.write(s.data(), std::streamsize(s.size()));
}
void write_matrix(std::ostream& out, const Matrix& m) {
  write_u32(out, std::uint32_t(m.rows()));
  write_u32(out, std::uint32_t(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()),
            std::streamsize(sizeof(double)) * m.size());
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
double read_f64(std::istream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
std::string read_string(std::istream& in) {
  std::uint32_t len = read_u32(in);
  std::string s(len, '\0');
  in.read(s.data(), len);
  return s;
}
Matrix read_matrix(std::istream& in) {
  std::uint32_t rows = read_u32(in);
  std::uint32_t cols = read_u32(in);
  Matrix m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()),
          std::streamsize(sizeof(double)) * m.size());
  return m;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model,
                     const TrainState* state) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + tmp);
    out.write(kMagic, sizeof kMagic);
    write_u64(out, model.config().fingerprint());
    write_string(out, model.config().canonical_text());
    write_u32(out, std::uint32_t(model.context_dim()));

    const auto& words = model.vocabulary().words();
    write_u64(out, words.size());
    for (const auto& w : words) write_string(out, w);
    write_string(out, model.vocabulary().char_set());

    const auto& store = model.params();
    write_u64(out, store.count());
    for (std::size_t i = 0; i < store.count(); ++i) {
      write_string(out, store[i].name);
      write_matrix(out, store[i].value);
    }

    TrainState empty;
    const TrainState& st = state != nullptr ? *state : empty;
    write_u64(out, std::uint64_t(st.step));
    write_f64(out, st.best_dev_f1);
    out.put(st.has_optimizer ? 1 : 0);
    if (st.has_optimizer) {
      if (st.adam_m.size() != store.count() ||
          st.adam_v.size() != store.count()) {
        throw Error("optimizer state does not match the parameter store");
      }
      write_u64(out, std::uint64_t(st.adam_steps));
      for (const auto& m : st.adam_m) write_matrix(out, m);
      for (const auto& v : st.adam_v) write_matrix(out, v);
    }
    if (!out) throw IoError("failed while writing checkpoint: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Model load_checkpoint(const std::string& path, TrainState* state_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw ValidationError("not a model checkpoint: " + path);
  }
  std::uint64_t fingerprint = read_u64(in);
  std::string cfg_text = read_string(in);
  int context_dim = int(read_u32(in));

  Config cfg = parse_config_text(cfg_text, path);
  if (cfg.fingerprint() != fingerprint) {
    throw ValidationError("checkpoint configuration fingerprint mismatch: " +
                          path);
  }

  std::uint64_t n_words = read_u64(in);
  std::vector<std::string> words(n_words);
  for (auto& w : words) w = read_string(in);
  std::string chars = read_string(in);
  Vocabulary vocab = Vocabulary::from_lists(std::move(words), std::move(chars));

  Model model = Model::create(std::move(cfg), std::move(vocab), context_dim);

  std::uint64_t n_params = read_u64(in);
  auto& store = model.params();
  if (n_params != store.count()) {
    throw ValidationError("checkpoint parameter count mismatch: " + path);
  }
  for (std::uint64_t i = 0; i < n_params; ++i) {
    std::string name = read_string(in);
    Matrix value = read_matrix(in);
    nn::Parameter* p = store.find(name);
    if (p == nullptr) {
      throw ValidationError("checkpoint names unknown parameter \"" + name +
                            "\": " + path);
    }
    if (p->rows() != value.rows() || p->cols() != value.cols()) {
      throw ValidationError("checkpoint shape mismatch for \"" + name +
                            "\": " + path);
    }
    p->value = std::move(value);
  }

  TrainState st;
  st.step = long(read_u64(in));
  st.best_dev_f1 = read_f64(in);
  st.has_optimizer = in.get() == 1;
  if (st.has_optimizer) {
    st.adam_steps = long(read_u64(in));
    st.adam_m.resize(store.count());
    st.adam_v.resize(store.count());
    for (auto& m : st.adam_m) m = read_matrix(in);
    for (auto& v : st.adam_v) v = read_matrix(in);
  }
  if (!in) throw ValidationError("truncated checkpoint: " + path);
  if (state_out != nullptr) *state_out = std::move(st);
  return model;
}

}  // namespace spanie
