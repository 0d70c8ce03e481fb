#include "segcl/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "segcl/core.hpp"

namespace segcl {

void PipelineConfig::validate() const {
  graph.validate();
  miner.validate();
  if (top_m < 1) throw SchemaError("top_m must be >= 1");
  encoder.validate();
  loss.validate();
  train.validate();
  probe.validate();
}

namespace {

std::string trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

struct KeyContext {
  std::string where;
  int line = 0;
  std::string section;
  std::string key;

  std::string describe() const {
    return where + " line " + std::to_string(line) + ": key " + key + " in [" + section + "]";
  }
};

double parse_double(const std::string& v, const KeyContext& ctx) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw SchemaError(ctx.describe() + ": expected a number, got `" + v + "`");
  }
}

template <typename Int>
Int parse_integer(const std::string& v, const KeyContext& ctx) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw SchemaError(ctx.describe() + ": expected an integer, got `" + v + "`");
  }
  return out;
}

bool parse_bool(const std::string& v, const KeyContext& ctx) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw SchemaError(ctx.describe() + ": expected true or false, got `" + v + "`");
}

std::vector<std::uint64_t> parse_u64_list(const std::string& v, const KeyContext& ctx) {
  std::vector<std::uint64_t> out;
  std::stringstream cells(v);
  std::string cell;
  while (std::getline(cells, cell, ',')) {
    out.push_back(parse_integer<std::uint64_t>(trim(cell), ctx));
  }
  if (out.empty()) throw SchemaError(ctx.describe() + ": expected a comma-separated list");
  return out;
}

void apply_key(PipelineConfig& cfg, const KeyContext& ctx, const std::string& value) {
  const std::string& s = ctx.section;
  const std::string& k = ctx.key;
  if (s == "graph") {
    if (k == "similarity_threshold_y") {
      cfg.graph.similarity_threshold_y = parse_double(value, ctx);
    } else if (k == "similarity_metric") {
      const auto m = similarity_metric_from_string(value);
      if (!m) throw SchemaError(ctx.describe() + ": unknown similarity metric `" + value + "`");
      cfg.graph.similarity_metric = *m;
    } else if (k == "pretrained_vectors") {
      cfg.graph.pretrained_vectors = value;
    } else {
      throw SchemaError(ctx.describe() + ": unknown key");
    }
  } else if (s == "miner") {
    if (k == "min_support") {
      cfg.miner.min_support = parse_integer<int>(value, ctx);
    } else if (k == "min_edges") {
      cfg.miner.min_edges = parse_integer<int>(value, ctx);
    } else if (k == "max_edges") {
      cfg.miner.max_edges = parse_integer<int>(value, ctx);
    } else if (k == "label_frequency_floor") {
      cfg.miner.label_frequency_floor = parse_integer<int>(value, ctx);
    } else if (k == "seed_order") {
      const auto o = seed_order_from_string(value);
      if (!o) throw SchemaError(ctx.describe() + ": unknown seed order `" + value + "`");
      cfg.miner.seed_order = *o;
    } else if (k == "top_m") {
      cfg.top_m = parse_integer<int>(value, ctx);
    } else {
      throw SchemaError(ctx.describe() + ": unknown key");
    }
  } else if (s == "encoder") {
    if (k == "d0") {
      cfg.encoder.d0 = parse_integer<int>(value, ctx);
    } else if (k == "hidden") {
      cfg.encoder.hidden = parse_integer<int>(value, ctx);
    } else if (k == "out") {
      cfg.encoder.out = parse_integer<int>(value, ctx);
    } else if (k == "feature_mode") {
      const auto m = feature_mode_from_string(value);
      if (!m) throw SchemaError(ctx.describe() + ": unknown feature mode `" + value + "`");
      cfg.encoder.feature_mode = *m;
    } else if (k == "pretrained_vectors") {
      cfg.encoder.pretrained_vectors = value;
    } else if (k == "rho") {
      cfg.encoder.rho = parse_double(value, ctx);
    } else if (k == "leaky_slope") {
      cfg.encoder.leaky_slope = parse_double(value, ctx);
    } else if (k == "event_from_anchor") {
      cfg.encoder.event_from_anchor = parse_bool(value, ctx);
    } else if (k == "readout_structural") {
      cfg.encoder.readout_structural = parse_bool(value, ctx);
    } else {
      throw SchemaError(ctx.describe() + ": unknown key");
    }
  } else if (s == "loss") {
    if (k == "eta") {
      cfg.loss.eta = parse_double(value, ctx);
    } else if (k == "theta") {
      cfg.loss.theta = parse_double(value, ctx);
    } else if (k == "w_e") {
      cfg.loss.w_e = parse_double(value, ctx);
    } else if (k == "w_s") {
      cfg.loss.w_s = parse_double(value, ctx);
    } else if (k == "k_negatives") {
      cfg.loss.k_negatives = parse_integer<int>(value, ctx);
    } else if (k == "upper_bound_mode") {
      const auto m = upper_bound_mode_from_string(value);
      if (!m) throw SchemaError(ctx.describe() + ": unknown upper bound mode `" + value + "`");
      cfg.loss.upper_bound_mode = *m;
    } else if (k == "ablate_structure") {
      cfg.loss.ablate_structure = parse_bool(value, ctx);
    } else if (k == "ablate_event") {
      cfg.loss.ablate_event = parse_bool(value, ctx);
    } else if (k == "ablate_upper_bound") {
      cfg.loss.ablate_upper_bound = parse_bool(value, ctx);
    } else {
      throw SchemaError(ctx.describe() + ": unknown key");
    }
  } else if (s == "train") {
    if (k == "learning_rate") {
      cfg.train.learning_rate = parse_double(value, ctx);
    } else if (k == "weight_decay") {
      cfg.train.weight_decay = parse_double(value, ctx);
    } else if (k == "reg_factor") {
      cfg.train.reg_factor = parse_double(value, ctx);
    } else if (k == "dropout") {
      cfg.train.dropout = parse_double(value, ctx);
    } else if (k == "max_epochs") {
      cfg.train.max_epochs = parse_integer<int>(value, ctx);
    } else if (k == "batch_size") {
      cfg.train.batch_size = parse_integer<int>(value, ctx);
    } else if (k == "seed") {
      cfg.train.seed = parse_integer<std::uint64_t>(value, ctx);
    } else if (k == "threads") {
      cfg.train.threads = parse_integer<int>(value, ctx);
    } else if (k == "convergence_window") {
      cfg.train.convergence_window = parse_integer<int>(value, ctx);
    } else if (k == "convergence_tol") {
      cfg.train.convergence_tol = parse_double(value, ctx);
    } else {
      throw SchemaError(ctx.describe() + ": unknown key");
    }
  } else if (s == "probe") {
    if (k == "train_fraction") {
      cfg.probe.train_fraction = parse_double(value, ctx);
    } else if (k == "probe_lr") {
      cfg.probe.probe_lr = parse_double(value, ctx);
    } else if (k == "probe_epochs") {
      cfg.probe.probe_epochs = parse_integer<int>(value, ctx);
    } else if (k == "repeats") {
      cfg.probe.repeats = parse_integer<int>(value, ctx);
    } else if (k == "micro_f1") {
      cfg.probe.micro_f1 = parse_bool(value, ctx);
    } else if (k == "seeds") {
      cfg.probe.seeds = parse_u64_list(value, ctx);
    } else {
      throw SchemaError(ctx.describe() + ": unknown key");
    }
  } else {
    throw SchemaError(ctx.where + " line " + std::to_string(ctx.line) + ": unknown section [" +
                      s + "]");
  }
}

}  // namespace

PipelineConfig parse_config(const std::string& text, const std::string& where) {
  PipelineConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw SchemaError(where + " line " + std::to_string(line_no) +
                          ": malformed section header `" + line + "`");
      }
      section = trim(line.substr(1, line.size() - 2));
      static const std::set<std::string> known = {"graph", "miner", "encoder",
                                                  "loss", "train", "probe"};
      if (!known.count(section)) {
        throw SchemaError(where + " line " + std::to_string(line_no) +
                          ": unknown section [" + section + "]");
      }
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw SchemaError(where + " line " + std::to_string(line_no) +
                        ": expected `key = value`, got `" + line + "`");
    }
    KeyContext ctx;
    ctx.where = where;
    ctx.line = line_no;
    ctx.section = section;
    ctx.key = trim(line.substr(0, eq));
    if (section.empty()) {
      throw SchemaError(where + " line " + std::to_string(line_no) + ": key " + ctx.key +
                        " appears before any [section]");
    }
    if (ctx.key.empty()) {
      throw SchemaError(where + " line " + std::to_string(line_no) + ": empty key");
    }
    apply_key(cfg, ctx, trim(line.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), "config " + path);
}

std::string config_echo(const PipelineConfig& cfg) {
  nlohmann::json j;
  j["graph"]["similarity_threshold_y"] = cfg.graph.similarity_threshold_y;
  j["graph"]["similarity_metric"] = std::string(to_string(cfg.graph.similarity_metric));
  j["graph"]["pretrained_vectors"] = cfg.graph.pretrained_vectors;
  j["miner"]["min_support"] = cfg.miner.min_support;
  j["miner"]["min_edges"] = cfg.miner.min_edges;
  j["miner"]["max_edges"] = cfg.miner.max_edges;
  j["miner"]["label_frequency_floor"] = cfg.miner.label_frequency_floor;
  j["miner"]["seed_order"] = std::string(to_string(cfg.miner.seed_order));
  j["miner"]["top_m"] = cfg.top_m;
  j["encoder"]["d0"] = cfg.encoder.d0;
  j["encoder"]["hidden"] = cfg.encoder.hidden;
  j["encoder"]["out"] = cfg.encoder.out;
  j["encoder"]["feature_mode"] = std::string(to_string(cfg.encoder.feature_mode));
  j["encoder"]["pretrained_vectors"] = cfg.encoder.pretrained_vectors;
  j["encoder"]["rho"] = cfg.encoder.rho;
  j["encoder"]["leaky_slope"] = cfg.encoder.leaky_slope;
  j["encoder"]["event_from_anchor"] = cfg.encoder.event_from_anchor;
  j["encoder"]["readout_structural"] = cfg.encoder.readout_structural;
  j["loss"]["eta"] = cfg.loss.eta;
  j["loss"]["theta"] = cfg.loss.theta;
  j["loss"]["w_e"] = cfg.loss.w_e;
  j["loss"]["w_s"] = cfg.loss.w_s;
  j["loss"]["k_negatives"] = cfg.loss.k_negatives;
  j["loss"]["upper_bound_mode"] = std::string(to_string(cfg.loss.upper_bound_mode));
  j["loss"]["ablate_structure"] = cfg.loss.ablate_structure;
  j["loss"]["ablate_event"] = cfg.loss.ablate_event;
  j["loss"]["ablate_upper_bound"] = cfg.loss.ablate_upper_bound;
  j["train"]["learning_rate"] = cfg.train.learning_rate;
  j["train"]["weight_decay"] = cfg.train.weight_decay;
  j["train"]["reg_factor"] = cfg.train.reg_factor;
  j["train"]["dropout"] = cfg.train.dropout;
  j["train"]["max_epochs"] = cfg.train.max_epochs;
  j["train"]["batch_size"] = cfg.train.batch_size;
  j["train"]["seed"] = cfg.train.seed;
  j["train"]["threads"] = cfg.train.threads;
  j["train"]["convergence_window"] = cfg.train.convergence_window;
  j["train"]["convergence_tol"] = cfg.train.convergence_tol;
  j["probe"]["train_fraction"] = cfg.probe.train_fraction;
  j["probe"]["probe_lr"] = cfg.probe.probe_lr;
  j["probe"]["probe_epochs"] = cfg.probe.probe_epochs;
  j["probe"]["repeats"] = cfg.probe.repeats;
  j["probe"]["micro_f1"] = cfg.probe.micro_f1;
  j["probe"]["seeds"] = cfg.probe.seeds;
  return j.dump(2) + "\n";
}

std::uint64_t config_hash(const PipelineConfig& cfg) {
  return fnv1a64(config_echo(cfg));
}

}  // namespace segcl
