#include "spanie/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "spanie/decoder.hpp"
#include "spanie/metrics.hpp"

namespace spanie {

using nn::Graph;
using nn::Var;

Var entity_loss(Graph& g, const DocumentScores& scores,
                const GoldAssignment& gold) {
  std::vector<Var> picked;
  picked.reserve(scores.entity_logprob.size());
  for (std::size_t i = 0; i < scores.entity_logprob.size(); ++i) {
    int target = int(gold.entity_target[i]);
    picked.push_back(g.pick_rows(scores.entity_logprob[i], {target}));
  }
  if (picked.empty()) return g.zeros(1);
  return g.scale(g.add_n(picked), -1.0);
}

Var relation_loss(Graph& g, const DocumentScores& scores,
                  const GoldAssignment& gold) {
  std::vector<Var> picked;
  picked.reserve(scores.relation_pairs.size());
  for (std::size_t p = 0; p < scores.relation_pairs.size(); ++p) {
    int target = 0;
    auto it = gold.relation_target.find(scores.relation_pairs[p]);
    if (it != gold.relation_target.end()) target = int(it->second);
    picked.push_back(g.pick_rows(scores.relation_logprob[p], {target}));
  }
  if (picked.empty()) return g.zeros(1);
  return g.scale(g.add_n(picked), -1.0);
}

Var coref_loss(Graph& g, const DocumentScores& scores,
               const GoldAssignment& gold) {
  const auto& members = scores.coref_beam.members;
  std::vector<Var> terms;
  terms.reserve(members.size());
  for (std::size_t k = 0; k < members.size(); ++k) {
    const auto& gold_set = gold.antecedent_sets[members[k]];
    std::vector<int> rows;
    const auto& candidates = scores.coref_candidates[k];
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      if (std::find(gold_set.begin(), gold_set.end(), candidates[c]) !=
          gold_set.end()) {
        rows.push_back(int(c) + 1);
      }
    }
    if (rows.empty()) rows.push_back(0);
    terms.push_back(g.logsumexp(g.pick_rows(scores.coref_logprob[k], rows)));
  }
  if (terms.empty()) return g.zeros(1);
  return g.scale(g.add_n(terms), -1.0);
}

Var total_objective(Graph& g, const DocumentScores& scores,
                    const GoldAssignment& gold, const Config& cfg) {
  return g.add_n({g.scale(entity_loss(g, scores, gold), cfg.task_weight_entity),
                  g.scale(relation_loss(g, scores, gold),
                          cfg.task_weight_relation),
                  g.scale(coref_loss(g, scores, gold),
                          cfg.task_weight_coref)});
}

double dev_f1(const Model& model, const std::vector<Document>& docs,
              const ContextStore* context) {
  std::vector<Document> preds;
  preds.reserve(docs.size());
  for (const auto& doc : docs) {
    Graph g;
    DocumentScores scores = model.forward(g, doc, context);
    preds.push_back(prediction_to_document(doc, decode(g, scores)));
  }
  EvalReport report = evaluate_documents(docs, preds);
  return (report.entity.f1 + report.relation.f1 + report.coref_average.f1) /
         3.0;
}

TrainSummary train(Model& model, const std::vector<Document>& train_docs,
                   const std::vector<Document>& dev_docs,
                   const ContextStore* context, const TrainOptions& opts) {
  if (train_docs.empty()) throw ValidationError("training corpus is empty");
  const Config& cfg = model.config();

  std::vector<GoldAssignment> gold;
  gold.reserve(train_docs.size());
  for (const auto& doc : train_docs) {
    gold.push_back(
        derive_gold(doc, enumerate_spans(doc, cfg.max_span_width).spans));
  }

  std::ofstream log;
  if (!opts.loss_log_path.empty()) {
    log.open(opts.loss_log_path);
    if (!log) throw IoError("cannot write loss log: " + opts.loss_log_path);
    log << "step\tentity\trelation\tcoref\ttotal\n";
  }

  nn::AdamOptimizer adam(model.params(), 0.9, 0.999, 1e-8, cfg.clip_norm);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train_docs.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();  // forces an initial shuffle

  TrainSummary summary;
  TrainState best_state;
  for (long step = 1; step <= cfg.max_steps; ++step) {
    if (cursor >= order.size()) {
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    const std::size_t idx = order[cursor++];
    const Document& doc = train_docs[idx];

    Graph g;
    DocumentScores scores = model.forward(g, doc, context, true, &rng);
    Var l_e = entity_loss(g, scores, gold[idx]);
    Var l_r = relation_loss(g, scores, gold[idx]);
    Var l_c = coref_loss(g, scores, gold[idx]);
    Var total = g.add_n({g.scale(l_e, cfg.task_weight_entity),
                         g.scale(l_r, cfg.task_weight_relation),
                         g.scale(l_c, cfg.task_weight_coref)});

    StepLosses losses;
    losses.entity = g.scalar(l_e);
    losses.relation = g.scalar(l_r);
    losses.coref = g.scalar(l_c);
    losses.total = g.scalar(total);
    if (!std::isfinite(losses.total)) {
      throw Error("training diverged at step " + std::to_string(step));
    }

    model.params().zero_grads();
    g.backward(total);
    const double lr =
        cfg.learn_rate *
        std::pow(cfg.lr_decay_rate, double(step / cfg.lr_decay_steps));
    adam.step(model.params(), lr);

    if (step == 1) summary.first_loss = losses.total;
    summary.final_loss = losses.total;
    summary.history.push_back(losses);
    if (log.is_open()) {
      log << step << '\t' << losses.entity << '\t' << losses.relation << '\t'
          << losses.coref << '\t' << losses.total << '\n';
    }
    if (opts.on_step) opts.on_step(step, losses);

    const bool last_step = step == cfg.max_steps;
    if (cfg.eval_every > 0 && (step % cfg.eval_every == 0 || last_step)) {
      double f1 = dev_docs.empty() ? -1.0 : dev_f1(model, dev_docs, context);
      if (opts.on_eval && !dev_docs.empty()) opts.on_eval(step, f1);
      if (dev_docs.empty() ? last_step : f1 > summary.best_dev_f1) {
        summary.best_dev_f1 = f1;
        summary.best_step = step;
        if (!opts.checkpoint_path.empty()) {
          TrainState st;
          st.step = step;
          st.best_dev_f1 = f1;
          st.has_optimizer = true;
          st.adam_steps = adam.steps_taken();
          st.adam_m = adam.first_moments();
          st.adam_v = adam.second_moments();
          save_checkpoint(opts.checkpoint_path, model, &st);
        }
      }
    }
    summary.steps = step;
  }
  return summary;
}

namespace {

double objective_value(const Model& model, const Document& doc,
                       const ContextStore* context,
                       const GoldAssignment& gold) {
  Graph g;
  DocumentScores scores = model.forward(g, doc, context);
  return g.scalar(total_objective(g, scores, gold, model.config()));
}

}  // namespace

GradientCheckResult gradient_check(Model& model, const Document& doc,
                                   const ContextStore* context,
                                   double step_scale) {
  const Config& cfg = model.config();
  GoldAssignment gold =
      derive_gold(doc, enumerate_spans(doc, cfg.max_span_width).spans);

  model.params().zero_grads();
  {
    Graph g;
    DocumentScores scores = model.forward(g, doc, context);
    g.backward(total_objective(g, scores, gold, cfg));
  }
  std::vector<nn::Matrix> analytic;
  auto& store = model.params();
  analytic.reserve(store.count());
  for (std::size_t p = 0; p < store.count(); ++p) {
    analytic.push_back(store[p].grad);
  }

  GradientCheckResult result;
  for (std::size_t p = 0; p < store.count(); ++p) {
    nn::Matrix& theta = store[p].value;
    for (int r = 0; r < theta.rows(); ++r) {
      for (int c = 0; c < theta.cols(); ++c) {
        const double saved = theta(r, c);
        const double h = step_scale * std::max(1.0, std::abs(saved));
        theta(r, c) = saved + h;
        const double up = objective_value(model, doc, context, gold);
        theta(r, c) = saved - h;
        const double down = objective_value(model, doc, context, gold);
        theta(r, c) = saved;

        const double numeric = (up - down) / (2.0 * h);
        const double a = analytic[p](r, c);
        const double rel =
            std::abs(a - numeric) /
            std::max({1.0, std::abs(a), std::abs(numeric)});
        ++result.entries;
        if (rel > result.max_rel_error) {
          result.max_rel_error = rel;
          result.worst_parameter = store[p].name;
        }
      }
    }
  }
  return result;
}

}  // namespace spanie
