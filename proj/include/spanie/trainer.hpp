#pragma once

#include <functional>
#include <string>
#include <vector>

#include "spanie/corpus.hpp"
#include "spanie/model.hpp"
#include "spanie/nn.hpp"

namespace spanie {

// Negative log-likelihood of the gold labels over every indexed span; the
// null label is a valid gold label and contributes its own term.
nn::Var entity_loss(nn::Graph& g, const DocumentScores& scores,
                    const GoldAssignment& gold);
// Same over the candidate ordered pairs; gold pairs whose endpoints were
// pruned from the beam contribute nothing.
nn::Var relation_loss(nn::Graph& g, const DocumentScores& scores,
                      const GoldAssignment& gold);
// Marginalized loss: -sum over beam spans of log of the summed
// probability of all surviving gold antecedents. A span whose gold
// antecedents were all pruned falls back to the null antecedent.
nn::Var coref_loss(nn::Graph& g, const DocumentScores& scores,
                   const GoldAssignment& gold);

nn::Var total_objective(nn::Graph& g, const DocumentScores& scores,
                        const GoldAssignment& gold, const Config& cfg);

struct StepLosses {
  double entity = 0.0;
  double relation = 0.0;
  double coref = 0.0;
  double total = 0.0;
};

struct TrainOptions {
  std::string checkpoint_path;  // empty disables checkpointing
  std::string loss_log_path;    // empty disables the loss log
  std::function<void(long step, const StepLosses&)> on_step;
  std::function<void(long step, double dev_f1)> on_eval;
};

struct TrainSummary {
  long steps = 0;
  double first_loss = 0.0;
  double final_loss = 0.0;
  double best_dev_f1 = -1.0;
  long best_step = 0;
  std::vector<StepLosses> history;
};

// Mean of entity F1, relation F1 and averaged coreference F1 on decoded
// predictions; drives best-checkpoint selection.
double dev_f1(const Model& model, const std::vector<Document>& docs,
              const ContextStore* context);

TrainSummary train(Model& model, const std::vector<Document>& train_docs,
                   const std::vector<Document>& dev_docs,
                   const ContextStore* context, const TrainOptions& opts);

struct GradientCheckResult {
  double max_rel_error = 0.0;
  std::size_t entries = 0;
  std::string worst_parameter;
};

// Compares analytic gradients of the document objective against central
// finite differences with step scaled by the entry magnitude. Runs the
// model in evaluation mode so the objective is deterministic.
GradientCheckResult gradient_check(Model& model, const Document& doc,
                                   const ContextStore* context,
                                   double step_scale = 1e-4);

}  // namespace spanie
