#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "spanie/corpus.hpp"
#include "toy_corpus.hpp"

using namespace spanie;

namespace {

namespace fs = std::filesystem;

struct RunResult {
  int code = -1;
  std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args) {
  std::string out_path = "cli_capture.txt";
  std::string cmd =
      std::string("\"") + SPANIE_CLI_PATH + "\" " + args + " > " + out_path +
      " 2>&1";
  int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out_path);
  std::ostringstream buf;
  buf << in.rdbuf();
  r.output = buf.str();
  std::remove(out_path.c_str());
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// Shared scratch dir so the pipeline stages can build on each other.
struct Workspace {
  Workspace() {
    fs::create_directories("cli_work");
    save_documents(spanie::testing::overfit_corpus(), corpus());
  }
  std::string corpus() const { return "cli_work/toy.jsonl"; }
  std::string checkpoint() const { return "cli_work/model.bin"; }
  std::string preds() const { return "cli_work/preds.jsonl"; }
};

std::string small_model_flags() {
  return "--hidden_size 12 --word_dim 8 --char_dim 3 --char_filters 4 "
         "--char_window 2 --width_dim 3 --ffnn_size 12 --ffnn_layers 1 "
         "--max_span_width 4 --dropout_lstm 0 --dropout_ffnn 0 "
         "--dropout_embed 0 --eval_every 15 --max_steps 30";
}

}  // namespace

TEST_CASE("help lists every verb and bad usage exits with one") {
  RunResult help = run_cli("--help");
  CHECK(help.code == 0);
  for (const char* verb : {"train", "predict", "evaluate", "build-kg",
                           "trend", "stats", "gradient-check"}) {
    CHECK(help.output.find(verb) != std::string::npos);
  }

  CHECK(run_cli("").code == 1);                      // no verb
  CHECK(run_cli("explode").code == 1);               // unknown verb
  CHECK(run_cli("stats").code == 1);                 // missing required flag
  CHECK(run_cli("stats --input a --bogus b").code == 1);
}

TEST_CASE("stats reports corpus totals") {
  Workspace ws;
  RunResult r = run_cli("stats --input " + ws.corpus());
  CHECK(r.code == 0);
  CHECK(r.output.find("documents\t5") != std::string::npos);
  CHECK(r.output.find("entities\t20") != std::string::npos);
  CHECK(r.output.find("relations\t5") != std::string::npos);
  CHECK(r.output.find("relations_per_doc\t1.0") != std::string::npos);
  CHECK(r.output.find("coref_links\t10") != std::string::npos);
  CHECK(r.output.find("coref_clusters\t10") != std::string::npos);

  CHECK(run_cli("stats --input cli_work/absent.jsonl").code == 3);
}

TEST_CASE("malformed corpus files exit with the data code") {
  fs::create_directories("cli_work");
  {
    std::ofstream bad("cli_work/bad.jsonl");
    bad << "{\"doc_key\": \"x\", not json\n";
  }
  RunResult r = run_cli("stats --input cli_work/bad.jsonl");
  CHECK(r.code == 2);
  CHECK(r.output.find("bad.jsonl") != std::string::npos);
}

TEST_CASE("evaluating predictions against themselves is perfect") {
  Workspace ws;
  RunResult r = run_cli("evaluate --gold " + ws.corpus() + " --pred " +
                        ws.corpus() + " --report cli_work/report.tsv");
  CHECK(r.code == 0);
  CHECK(r.output.find("entity\t1\t1\t1") != std::string::npos);
  CHECK(r.output.find("relation\t1\t1\t1") != std::string::npos);
  CHECK(r.output.find("coref_average\t1\t1\t1") != std::string::npos);
  CHECK(slurp("cli_work/report.tsv") == r.output);
}

TEST_CASE("invalid configuration exits with the usage code") {
  Workspace ws;
  {
    std::ofstream cfg("cli_work/bad.cfg");
    cfg << "hidden_size = -2\n";
  }
  CHECK(run_cli("train --train " + ws.corpus() +
                " --config cli_work/bad.cfg --quiet")
            .code == 1);
  {
    std::ofstream cfg("cli_work/typo.cfg");
    cfg << "hidden_sizes = 12\n";
  }
  CHECK(run_cli("train --train " + ws.corpus() +
                " --config cli_work/typo.cfg --quiet")
            .code == 1);
}

TEST_CASE("train, predict and evaluate chain through files") {
  Workspace ws;
  RunResult train = run_cli("train --train " + ws.corpus() + " --dev " +
                            ws.corpus() + " --checkpoint-out " +
                            ws.checkpoint() + " --loss-log cli_work/loss.tsv" +
                            " --quiet --seed 11 " + small_model_flags());
  CAPTURE(train.output);
  REQUIRE(train.code == 0);
  CHECK(train.output.find("trained 30 steps") != std::string::npos);
  CHECK(fs::exists(ws.checkpoint()));

  std::string loss_log = slurp("cli_work/loss.tsv");
  CHECK(loss_log.find("step\tentity\trelation\tcoref\ttotal") == 0);

  RunResult predict =
      run_cli("predict --checkpoint " + ws.checkpoint() + " --input " +
              ws.corpus() + " --output " + ws.preds());
  CAPTURE(predict.output);
  REQUIRE(predict.code == 0);
  CHECK(fs::exists(ws.preds()));
  CHECK(load_documents(ws.preds()).size() == 5);

  // parallel decoding must not change the result
  RunResult parallel =
      run_cli("predict --checkpoint " + ws.checkpoint() + " --input " +
              ws.corpus() + " --output cli_work/preds_par.jsonl --workers 3");
  REQUIRE(parallel.code == 0);
  CHECK(slurp(ws.preds()) == slurp("cli_work/preds_par.jsonl"));

  RunResult eval = run_cli("evaluate --gold " + ws.corpus() + " --pred " +
                           ws.preds() + " --json cli_work/report.json");
  REQUIRE(eval.code == 0);
  CHECK(slurp("cli_work/report.json").find("\"f1\"") != std::string::npos);

  CHECK(run_cli("predict --checkpoint cli_work/nope.bin --input " +
                ws.corpus() + " --output cli_work/x.jsonl")
            .code == 3);
}

TEST_CASE("knowledge graph exports and trends run from the command line") {
  Workspace ws;
  // hand-written predictions: the method phrase appears in every document
  std::vector<Document> preds;
  for (int i = 0; i < 4; ++i) {
    Document d;
    d.doc_key = "kg" + std::to_string(i);
    d.sentences = {{"fast", "taggers", "help", "tagging"}};
    d.gold_entities = {{Span{0, 1, 0}, EntityType::Method},
                       {Span{3, 3, 0}, EntityType::Task}};
    if (i < 3) {
      d.gold_relations = {{Span{0, 1, 0}, Span{3, 3, 0},
                           RelationType::UsedFor}};
    }
    preds.push_back(std::move(d));
  }
  save_documents(preds, "cli_work/kg_preds.jsonl");
  {
    std::ofstream meta("cli_work/meta.jsonl");
    for (int i = 0; i < 4; ++i) {
      meta << "{\"doc_key\": \"kg" << i << "\", \"year\": " << (2015 + i % 2)
           << ", \"venue\": \"ACL\"}\n";
    }
  }

  RunResult kg = run_cli(
      "build-kg --input cli_work/kg_preds.jsonl --out-dir cli_work/kg "
      "--threshold 1");
  CAPTURE(kg.output);
  REQUIRE(kg.code == 0);
  for (const char* f : {"nodes.tsv", "edges.tsv", "graph.json",
                        "residual.tsv"}) {
    CHECK(fs::exists(fs::path("cli_work/kg") / f));
  }
  std::string graph_once = slurp("cli_work/kg/graph.json");
  REQUIRE(run_cli("build-kg --input cli_work/kg_preds.jsonl --out-dir "
                  "cli_work/kg --threshold 1")
              .code == 0);
  CHECK(slurp("cli_work/kg/graph.json") == graph_once);  // reruns identical

  RunResult trend = run_cli(
      "trend --graph cli_work/kg/graph.json --metadata cli_work/meta.jsonl "
      "--term \"fast taggers\" --task tagging --output cli_work/trend.tsv");
  CAPTURE(trend.output);
  REQUIRE(trend.code == 0);
  CHECK(trend.output.find("year\twith_triple\tmentioning\tratio") !=
        std::string::npos);
  CHECK(trend.output.find("2015\t2\t2\t1") != std::string::npos);
  CHECK(trend.output.find("2016\t1\t2\t0.5") != std::string::npos);
  CHECK(slurp("cli_work/trend.tsv") == trend.output);

  RunResult unknown = run_cli(
      "trend --graph cli_work/kg/graph.json --metadata cli_work/meta.jsonl "
      "--term unobtainium --task tagging");
  CHECK(unknown.code == 0);
  CHECK(unknown.output.find("warning") != std::string::npos);
}

TEST_CASE("the gradient verification verb runs end to end") {
  fs::create_directories("cli_work");
  Document doc = spanie::testing::gradient_doc();
  save_documents({doc}, "cli_work/grad.jsonl");
  RunResult r = run_cli(
      "gradient-check --input cli_work/grad.jsonl --hidden_size 3 "
      "--word_dim 3 --char_dim 2 --char_filters 2 --char_window 2 "
      "--width_dim 2 --ffnn_size 4 --ffnn_layers 1 --max_span_width 2 "
      "--dropout_lstm 0 --dropout_ffnn 0 --dropout_embed 0");
  CAPTURE(r.output);
  CHECK(r.code == 0);
  CHECK(r.output.find("gradient check passed") != std::string::npos);
  fs::remove_all("cli_work");
}
