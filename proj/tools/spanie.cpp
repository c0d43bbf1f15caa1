#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "spanie/config.hpp"
#include "spanie/corpus.hpp"
#include "spanie/decoder.hpp"
#include "spanie/kgraph.hpp"
#include "spanie/metrics.hpp"
#include "spanie/model.hpp"
#include "spanie/trainer.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

// Collects --<config key> <value> flags for every recognized key.
void add_config_flags(CLI::App* cmd,
                      std::map<std::string, std::string>& overrides) {
  for (const auto& key : spanie::config_keys()) {
    cmd->add_option_function<std::string>(
        "--" + key,
        [&overrides, key](const std::string& value) {
          overrides[key] = value;
        },
        "config override");
  }
}

spanie::Config resolve_config(
    const std::string& config_path,
    const std::map<std::string, std::string>& overrides) {
  spanie::Config cfg;
  if (!config_path.empty()) cfg = spanie::load_config(config_path);
  spanie::apply_overrides(cfg, overrides);
  return cfg;
}

const spanie::ContextStore* maybe_context(
    const spanie::Config& cfg, spanie::ContextStore& storage) {
  if (cfg.context_embeddings.empty()) return nullptr;
  storage = spanie::ContextStore::load(cfg.context_embeddings);
  return &storage;
}

void atomic_write_text(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw spanie::IoError("cannot write: " + tmp);
    out << content;
    if (!out) throw spanie::IoError("failed while writing: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::vector<spanie::Document> predict_documents(
    const spanie::Model& model, const std::vector<spanie::Document>& docs,
    const spanie::ContextStore* context, int workers) {
  std::vector<spanie::Document> out(docs.size());
  auto run = [&](std::size_t i) {
    spanie::nn::Graph g;
    spanie::DocumentScores scores = model.forward(g, docs[i], context);
    out[i] = prediction_to_document(docs[i], decode(g, scores));
  };
  if (workers <= 1 || docs.size() < 2) {
    for (std::size_t i = 0; i < docs.size(); ++i) run(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  std::vector<std::thread> pool;
  const int n = std::min<int>(workers, int(docs.size()));
  for (int w = 0; w < n; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < docs.size(); i = next++) {
        try {
          run(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

int run_train(const std::string& config_path,
              const std::map<std::string, std::string>& overrides,
              const std::string& train_path, const std::string& dev_path,
              const std::string& checkpoint_override,
              const std::string& loss_log, bool quiet) {
  spanie::Config cfg = resolve_config(config_path, overrides);
  auto train_docs = spanie::load_documents(train_path);
  std::vector<spanie::Document> dev_docs;
  if (!dev_path.empty()) dev_docs = spanie::load_documents(dev_path);

  spanie::ContextStore store;
  const spanie::ContextStore* context = maybe_context(cfg, store);

  spanie::Vocabulary vocab = spanie::Vocabulary::build(train_docs);
  spanie::Model model = spanie::Model::create(
      cfg, std::move(vocab), context != nullptr ? context->dim() : 0);

  spanie::TrainOptions opts;
  opts.checkpoint_path =
      checkpoint_override.empty() ? cfg.checkpoint : checkpoint_override;
  opts.loss_log_path = loss_log;
  if (!quiet) {
    opts.on_step = [](long step, const spanie::StepLosses& losses) {
      if (step % 50 == 0) {
        std::cout << "step " << step << " loss " << losses.total << "\n";
      }
    };
    opts.on_eval = [](long step, double f1) {
      std::cout << "step " << step << " dev f1 " << f1 << "\n";
    };
  }
  spanie::TrainSummary summary =
      spanie::train(model, train_docs, dev_docs, context, opts);
  std::cout << "trained " << summary.steps << " steps, final loss "
            << summary.final_loss;
  if (summary.best_dev_f1 >= 0) {
    std::cout << ", best dev f1 " << summary.best_dev_f1 << " at step "
              << summary.best_step;
  }
  std::cout << "\ncheckpoint: " << opts.checkpoint_path << "\n";
  return kExitOk;
}

int run_predict(const std::string& checkpoint_path,
                const std::string& input_path, const std::string& output_path,
                const std::string& context_path, int workers) {
  spanie::Model model = spanie::load_checkpoint(checkpoint_path, nullptr);
  auto docs = spanie::load_documents(input_path);

  spanie::ContextStore store;
  const spanie::ContextStore* context = nullptr;
  if (!context_path.empty()) {
    store = spanie::ContextStore::load(context_path);
    context = &store;
  } else if (!model.config().context_embeddings.empty()) {
    store = spanie::ContextStore::load(model.config().context_embeddings);
    context = &store;
  }
  if (model.context_dim() > 0 && context == nullptr) {
    throw spanie::ValidationError(
        "model expects context embeddings; pass --context");
  }

  auto preds = predict_documents(model, docs, context, workers);
  spanie::save_documents(preds, output_path);
  std::cout << "wrote " << preds.size() << " predictions to " << output_path
            << "\n";
  return kExitOk;
}

int run_evaluate(const std::string& gold_path, const std::string& pred_path,
                 const std::string& report_path,
                 const std::string& json_path) {
  auto gold = spanie::load_documents(gold_path);
  auto pred = spanie::load_documents(pred_path);
  spanie::EvalReport report = spanie::evaluate_documents(gold, pred);
  std::string text = spanie::report_text(report);
  std::cout << text;
  if (!report_path.empty()) atomic_write_text(report_path, text);
  if (!json_path.empty()) {
    atomic_write_text(json_path, spanie::report_json(report));
  }
  return kExitOk;
}

int run_build_kg(const std::string& input_path, const std::string& out_dir,
                 long threshold, bool per_document, int workers) {
  auto docs = spanie::load_documents(input_path);
  spanie::KgOptions opts;
  opts.threshold = threshold;
  opts.count_per_document = per_document;
  (void)workers;  // graph construction is dominated by counting merges
  spanie::KnowledgeGraph graph = spanie::build_graph(docs, opts);

  std::filesystem::create_directories(out_dir);
  auto in_dir = [&](const char* name) {
    return (std::filesystem::path(out_dir) / name).string();
  };
  spanie::export_nodes_tsv(graph, in_dir("nodes.tsv"));
  spanie::export_edges_tsv(graph, in_dir("edges.tsv"));
  spanie::export_graph_json(graph, in_dir("graph.json"));
  spanie::export_residual_report(graph, in_dir("residual.tsv"));
  std::cout << "graph: " << graph.nodes.size() << " nodes, "
            << graph.edges.size() << " node pairs, "
            << graph.residual.size() << " residual phrases\n"
            << "exports in " << out_dir << "\n";
  return kExitOk;
}

int run_trend(const std::string& graph_path, const std::string& meta_path,
              const std::string& term, const std::string& task,
              const std::string& relation, const std::string& output_path) {
  spanie::KnowledgeGraph graph = spanie::load_graph_json(graph_path);
  auto meta = spanie::load_metadata(meta_path);
  spanie::RelationType type = spanie::parse_relation_type(relation);
  spanie::TrendSeries series = spanie::trend(graph, term, type, task, meta);
  if (series.unknown_term || series.unknown_task) {
    std::cerr << "warning: "
              << (series.unknown_term ? series.term : series.task)
              << " is not a graph node; series is empty\n";
  }
  std::ostringstream out;
  out << "year\twith_triple\tmentioning\tratio\n";
  for (const auto& p : series.points) {
    out << p.year << '\t' << p.with_triple << '\t' << p.mentioning << '\t'
        << p.ratio << '\n';
  }
  std::cout << out.str();
  if (!output_path.empty()) atomic_write_text(output_path, out.str());
  return kExitOk;
}

int run_stats(const std::string& input_path) {
  auto docs = spanie::load_documents(input_path);
  spanie::CorpusStats stats = spanie::corpus_stats(docs);
  std::cout << "documents\t" << stats.documents << "\n"
            << "entities\t" << stats.entities << "\n"
            << "relations\t" << stats.relations << "\n"
            << "relations_per_doc\t" << std::fixed << std::setprecision(1)
            << stats.relations_per_doc << "\n"
            << std::defaultfloat << std::setprecision(6)
            << "coref_links\t" << stats.coref_links << "\n"
            << "coref_clusters\t" << stats.coref_clusters << "\n";
  if (stats.empty_corpus) std::cout << "warning\tempty corpus\n";
  return kExitOk;
}

int run_gradient_check(const std::string& config_path,
                       const std::map<std::string, std::string>& overrides,
                       const std::string& input_path, int doc_index,
                       double tolerance) {
  spanie::Config cfg = resolve_config(config_path, overrides);
  auto docs = spanie::load_documents(input_path);
  if (doc_index < 0 || doc_index >= int(docs.size())) {
    throw spanie::ValidationError("document index out of range");
  }
  spanie::ContextStore store;
  const spanie::ContextStore* context = maybe_context(cfg, store);
  spanie::Model model = spanie::Model::create(
      cfg, spanie::Vocabulary::build(docs),
      context != nullptr ? context->dim() : 0);
  spanie::GradientCheckResult result =
      spanie::gradient_check(model, docs[doc_index], context);
  std::cout << "checked " << result.entries << " parameter entries\n"
            << "max relative error " << result.max_rel_error << " ("
            << result.worst_parameter << ")\n";
  if (result.max_rel_error > tolerance) {
    std::cerr << "gradient check failed: " << result.max_rel_error << " > "
              << tolerance << "\n";
    return kExitRuntime;
  }
  std::cout << "gradient check passed (tolerance " << tolerance << ")\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Span-based scientific information extraction"};
  app.require_subcommand(1);

  std::map<std::string, std::string> overrides;
  std::string config_path, train_path, dev_path, checkpoint_path, loss_log;
  std::string input_path, output_path, context_path;
  std::string gold_path, pred_path, report_path, json_path;
  std::string graph_path, meta_path, term, task;
  std::string relation = "Used-for";
  std::string out_dir = "kg";
  long threshold = 10;
  bool per_document = false;
  bool quiet = false;
  int workers = 1;
  int doc_index = 0;
  double tolerance = 1e-4;

  auto* train = app.add_subcommand("train", "train a model");
  train->add_option("--config", config_path, "config file");
  train->add_option("--train", train_path, "training corpus (JSON lines)")
      ->required();
  train->add_option("--dev", dev_path, "development corpus");
  train->add_option("--checkpoint-out", checkpoint_path,
                    "checkpoint path (overrides config)");
  train->add_option("--loss-log", loss_log, "per-step loss log (TSV)");
  train->add_flag("--quiet", quiet, "suppress progress output");
  add_config_flags(train, overrides);

  auto* predict = app.add_subcommand("predict", "decode a corpus");
  predict->add_option("--checkpoint", checkpoint_path, "model checkpoint")
      ->required();
  predict->add_option("--input", input_path, "corpus to decode")->required();
  predict->add_option("--output", output_path, "predictions path")
      ->required();
  predict->add_option("--context", context_path, "context embedding store");
  predict->add_option("--workers", workers, "parallel documents");

  auto* evaluate = app.add_subcommand("evaluate", "score predictions");
  evaluate->add_option("--gold", gold_path, "gold corpus")->required();
  evaluate->add_option("--pred", pred_path, "predictions")->required();
  evaluate->add_option("--report", report_path, "text report path");
  evaluate->add_option("--json", json_path, "structured report path");

  auto* build_kg = app.add_subcommand("build-kg", "build a knowledge graph");
  build_kg->add_option("--input", input_path, "predictions")->required();
  build_kg->add_option("--out-dir", out_dir, "export directory");
  build_kg->add_option("--threshold", threshold, "node count threshold k");
  build_kg->add_flag("--per-document", per_document,
                     "count each phrase once per document");
  build_kg->add_option("--workers", workers, "parallel documents");

  auto* trend_cmd = app.add_subcommand("trend", "query usage trends");
  trend_cmd->add_option("--graph", graph_path, "graph.json from build-kg")
      ->required();
  trend_cmd->add_option("--metadata", meta_path, "doc_key/year/venue lines")
      ->required();
  trend_cmd->add_option("--term", term, "source term")->required();
  trend_cmd->add_option("--task", task, "target task")->required();
  trend_cmd->add_option("--relation", relation, "relation type");
  trend_cmd->add_option("--output", output_path, "series output (TSV)");

  auto* stats = app.add_subcommand("stats", "corpus statistics");
  stats->add_option("--input", input_path, "corpus")->required();

  auto* gradcheck =
      app.add_subcommand("gradient-check", "verify analytic gradients");
  gradcheck->add_option("--config", config_path, "config file");
  gradcheck->add_option("--input", input_path, "corpus")->required();
  gradcheck->add_option("--doc-index", doc_index, "document to check");
  gradcheck->add_option("--tolerance", tolerance, "max relative error");
  add_config_flags(gradcheck, overrides);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (train->parsed()) {
      return run_train(config_path, overrides, train_path, dev_path,
                       checkpoint_path, loss_log, quiet);
    }
    if (predict->parsed()) {
      return run_predict(checkpoint_path, input_path, output_path,
                         context_path, workers);
    }
    if (evaluate->parsed()) {
      return run_evaluate(gold_path, pred_path, report_path, json_path);
    }
    if (build_kg->parsed()) {
      return run_build_kg(input_path, out_dir, threshold, per_document,
                          workers);
    }
    if (trend_cmd->parsed()) {
      return run_trend(graph_path, meta_path, term, task, relation,
                       output_path);
    }
    if (stats->parsed()) {
      return run_stats(input_path);
    }
    if (gradcheck->parsed()) {
      return run_gradient_check(config_path, overrides, input_path, doc_index,
                                tolerance);
    }
  } catch (const spanie::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const spanie::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const spanie::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
