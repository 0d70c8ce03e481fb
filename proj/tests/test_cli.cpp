#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "segcl/embed_io.hpp"
#include "support/temp.hpp"

using segcl::testing::slurp;
using segcl::testing::TempDir;

namespace {

int run_cli(const std::string& args, const std::string& capture = "") {
  std::string cmd = std::string(SEGCL_BIN) + " " + args;
  if (!capture.empty()) {
    cmd += " > " + capture + " 2>&1";
  } else {
    cmd += " > /dev/null 2>&1";
  }
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

const char* kConfig = R"([graph]
similarity_threshold_y = 0.8

[miner]
min_support = 2
min_edges = 1
max_edges = 3
top_m = 2

[encoder]
d0 = 8
hidden = 8
out = 8

[loss]
k_negatives = 1

[train]
learning_rate = 0.02
dropout = 0.0
max_epochs = 8
batch_size = 4
seed = 11
threads = 1

[probe]
repeats = 2
probe_epochs = 40
)";

struct Workspace {
  TempDir dir;
  std::string conf, corpus, events, graphs, patterns, ck, emb, metrics;

  Workspace() {
    conf = dir.file("conf.ini");
    corpus = dir.file("corpus.tsv");
    events = dir.file("events.jsonl");
    graphs = dir.file("graphs.json");
    patterns = dir.file("patterns.json");
    ck = dir.file("ck.json");
    emb = dir.file("emb.tsv");
    metrics = dir.file("metrics.csv");
    std::ofstream out(conf);
    out << kConfig;
  }

  std::string cfg_arg() const { return "--config " + conf + " "; }

  void run_pipeline() {
    REQUIRE(run_cli(cfg_arg() + "synth --out " + corpus + " --docs 12 --synth-seed 3") == 0);
    REQUIRE(run_cli(cfg_arg() + "extract --in " + corpus + " --format labeled-tsv --out " +
                    events) == 0);
    REQUIRE(run_cli(cfg_arg() + "build --events " + events + " --out " + graphs) == 0);
    REQUIRE(run_cli(cfg_arg() + "mine --graphs " + graphs + " --out " + patterns) == 0);
    REQUIRE(run_cli(cfg_arg() + "train --graphs " + graphs + " --patterns " + patterns +
                    " --out " + ck) == 0);
    REQUIRE(run_cli(cfg_arg() + "embed --graphs " + graphs + " --patterns " + patterns +
                    " --checkpoint " + ck + " --out " + emb) == 0);
    REQUIRE(run_cli(cfg_arg() + "eval --embeddings " + emb + " --corpus " + corpus +
                    " --out " + metrics) == 0);
  }
};

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("full pipeline runs end to end") {
  Workspace ws;
  ws.run_pipeline();

  // corpus: 12 labeled lines
  const auto corpus_lines = split_lines(slurp(ws.corpus));
  CHECK(corpus_lines.size() == 12);
  CHECK(corpus_lines[0].find('\t') != std::string::npos);

  // embeddings cover every document
  const segcl::EmbeddingTable table = segcl::load_embeddings(ws.emb);
  CHECK(table.doc_ids.size() == 12);
  CHECK(table.vectors.cols() == 8);

  // history CSV sits next to the checkpoint
  const auto history = split_lines(slurp(ws.ck + ".history.csv"));
  REQUIRE(!history.empty());
  CHECK(history[0] == "epoch,zeta_s,zeta_e,zeta_u,zeta_total");
  CHECK(history.size() >= 2);

  // metrics CSV has the probe table shape
  const auto metric_lines = split_lines(slurp(ws.metrics));
  REQUIRE(!metric_lines.empty());
  CHECK(metric_lines[0] == "run,seed,precision,macro_f1");
  CHECK(metric_lines.back().rfind("best,", 0) == 0);

  SUBCASE("manifests record command, config hash, and io") {
    const nlohmann::json m = nlohmann::json::parse(slurp(ws.ck + ".manifest.json"));
    CHECK(m.at("command") == "train");
    CHECK(m.at("version").is_number_integer());
    CHECK(m.at("config_hash").is_string());
    CHECK(m.at("config").is_object());
    CHECK(m.at("inputs").is_array());
    CHECK(m.at("outputs").is_array());
    CHECK(m.at("timings_ms").is_object());
    CHECK(m.at("seed").is_number_integer());

    const nlohmann::json e = nlohmann::json::parse(slurp(ws.emb + ".manifest.json"));
    CHECK(e.at("command") == "embed");
    CHECK(e.at("config_hash") == m.at("config_hash"));
  }

  SUBCASE("reruns are byte identical") {
    const std::string emb_bytes = slurp(ws.emb);
    const std::string metric_bytes = slurp(ws.metrics);
    const std::string history_bytes = slurp(ws.ck + ".history.csv");

    REQUIRE(run_cli(ws.cfg_arg() + "train --graphs " + ws.graphs + " --patterns " +
                    ws.patterns + " --out " + ws.ck) == 0);
    REQUIRE(run_cli(ws.cfg_arg() + "embed --graphs " + ws.graphs + " --patterns " +
                    ws.patterns + " --checkpoint " + ws.ck + " --out " + ws.emb) == 0);
    REQUIRE(run_cli(ws.cfg_arg() + "eval --embeddings " + ws.emb + " --corpus " +
                    ws.corpus + " --out " + ws.metrics) == 0);

    CHECK(slurp(ws.ck + ".history.csv") == history_bytes);
    CHECK(slurp(ws.emb) == emb_bytes);
    CHECK(slurp(ws.metrics) == metric_bytes);
  }

  SUBCASE("--seed overrides the config seed") {
    const std::string other_ck = ws.dir.file("ck_seed.json");
    REQUIRE(run_cli(ws.cfg_arg() + "--seed 99 train --graphs " + ws.graphs +
                    " --patterns " + ws.patterns + " --out " + other_ck) == 0);
    CHECK(slurp(other_ck + ".history.csv") != slurp(ws.ck + ".history.csv"));
    const nlohmann::json m = nlohmann::json::parse(slurp(other_ck + ".manifest.json"));
    CHECK(m.at("seed") == 99);
  }
}

TEST_CASE("missing inputs exit 2 and name the producing command") {
  Workspace ws;
  const std::string log = ws.dir.file("err.txt");
  CHECK(run_cli(ws.cfg_arg() + "build --events " + ws.dir.file("absent.jsonl") +
                " --out " + ws.graphs, log) == 2);
  const std::string text = slurp(log);
  CHECK(text.find("missing input file") != std::string::npos);
  CHECK(text.find("segcl extract") != std::string::npos);

  CHECK(run_cli(ws.cfg_arg() + "train --graphs nope.json --patterns also-nope.json --out " +
                ws.ck, log) == 2);
  CHECK(slurp(log).find("segcl") != std::string::npos);
}

TEST_CASE("--ablate upper_bound zeroes the zeta_u column") {
  Workspace ws;
  REQUIRE(run_cli(ws.cfg_arg() + "synth --out " + ws.corpus + " --docs 8 --synth-seed 5") == 0);
  REQUIRE(run_cli(ws.cfg_arg() + "extract --in " + ws.corpus + " --out " + ws.events) == 0);
  REQUIRE(run_cli(ws.cfg_arg() + "build --events " + ws.events + " --out " + ws.graphs) == 0);
  REQUIRE(run_cli(ws.cfg_arg() + "mine --graphs " + ws.graphs + " --out " + ws.patterns) == 0);
  REQUIRE(run_cli(ws.cfg_arg() + "train --graphs " + ws.graphs + " --patterns " +
                  ws.patterns + " --ablate upper_bound --out " + ws.ck) == 0);

  const auto lines = split_lines(slurp(ws.ck + ".history.csv"));
  REQUIRE(lines.size() >= 2);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::istringstream row(lines[i]);
    std::string field;
    for (int j = 0; j < 4; ++j) std::getline(row, field, ',');
    CHECK(field == "0");  // zeta_u
  }

  const nlohmann::json m = nlohmann::json::parse(slurp(ws.ck + ".manifest.json"));
  CHECK(m.at("extra").at("ablate") == "upper_bound");

  SUBCASE("unknown ablation tag fails") {
    CHECK(run_cli(ws.cfg_arg() + "train --graphs " + ws.graphs + " --patterns " +
                  ws.patterns + " --ablate nothing --out " + ws.ck) == 1);
  }
}

TEST_CASE("bad invocations fail cleanly") {
  Workspace ws;
  // no subcommand
  CHECK(run_cli("") != 0);
  // unknown flag
  CHECK(run_cli("synth --frobnicate 1") != 0);
  // extract needs an input
  CHECK(run_cli(ws.cfg_arg() + "extract --out " + ws.events) == 1);
  // bad config file
  const std::string bad = ws.dir.file("bad.ini");
  {
    std::ofstream out(bad);
    out << "[nope]\nx = 1\n";
  }
  const std::string log = ws.dir.file("err.txt");
  CHECK(run_cli("--config " + bad + " synth --out " + ws.corpus, log) == 1);
  CHECK(slurp(log).find("unknown section") != std::string::npos);
}
