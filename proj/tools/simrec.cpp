// Copyright 2026 The SimRec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Command-line pipeline: synth, prepare, cooc, train, eval, visualize,
// theory-check and bench. Every command writes a JSON run manifest next to
// its artifact.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "simrec/simrec.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace simrec::cli {
namespace {

std::string default_data_dir() {
  const char* env = std::getenv("SIMREC_DATA");
  return env && *env ? env : "data";
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::string read_bytes(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail("cannot read '", path.string(), "'");
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

// FNV-1a over the contents of the given files, in order.
std::string fingerprint(const std::vector<fs::path>& files) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& f : files) h = fnv1a(read_bytes(f), h);
  return hex64(h);
}

std::vector<fs::path> prepared_files(const fs::path& dir) {
  return {dir / "items.txt", dir / "sequences.txt", dir / "split.txt"};
}

void require_file(const fs::path& path, const char* what, const char* hint) {
  if (!fs::exists(path)) fail(what, " '", path.string(), "' does not exist (", hint, ")");
}

class Manifest {
 public:
  explicit Manifest(std::string command) { doc_["command"] = std::move(command); }

  Json& config() { return doc_["config"]; }
  void dataset(const std::string& fp) { doc_["dataset_fingerprint"] = fp; }
  void seed(const std::string& name, std::uint64_t v) { doc_["seeds"][name] = v; }
  void artifact(const std::string& name, const fs::path& path) { doc_["artifacts"][name] = path.string(); }
  Json& results() { return doc_["results"]; }

  // Times `fn` as the named phase.
  template <typename F>
  auto phase(const std::string& name, F&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    auto record = [&] {
      doc_["phases"][name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      record();
    } else {
      auto out = fn();
      record();
      return out;
    }
  }

  void write(const fs::path& path) const {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) fail("cannot write manifest '", path.string(), "'");
    os << doc_.dump(2) << '\n';
    std::cout << "manifest: " << path.string() << '\n';
  }

 private:
  Json doc_ = Json::object();
};

fs::path manifest_for(const fs::path& artifact) { return fs::path(artifact.string() + ".manifest.json"); }

Json config_json(const TrainConfig& c) {
  Json j;
  j["d"] = c.d;
  j["K"] = c.K;
  j["L"] = c.L;
  j["lr"] = c.lr;
  j["batch"] = c.batch;
  j["neg_multiplier"] = c.neg_multiplier;
  j["max_iters"] = c.max_iters;
  j["eval_every"] = c.eval_every;
  j["patience"] = c.patience;
  j["seed"] = c.seed;
  j["T"] = c.T;
  j["mode"] = to_string(c.mode);
  j["positional"] = c.positional;
  return j;
}

// Train-config flags share names with the config-file keys; flags given on
// the command line override the file.
struct ConfigFlags {
  std::string file;
  std::map<std::string, std::string> values;

  void attach(CLI::App* app) {
    app->add_option("--config", file, "key=value config file");
    for (const char* key : {"d", "K", "L", "lr", "batch", "neg_multiplier", "max_iters", "eval_every", "patience",
                            "seed", "T", "mode", "positional"}) {
      app->add_option(std::string("--") + key, values[key], std::string("override config key ") + key);
    }
  }

  TrainConfig resolve(CLI::App* app) const {
    TrainConfig cfg;
    if (!file.empty()) {
      std::ifstream is(file);
      if (!is) fail("cannot read config '", file, "'");
      cfg = parse_config(is);
    }
    for (const auto& [key, value] : values) {
      if (app->count(std::string("--") + key) > 0) cfg.set(key, value);
    }
    cfg.validate();
    return cfg;
  }
};

struct LoadedModel {
  Checkpoint<float> ckpt;
  CoocMatrix cooc;
  bool has_cooc = false;

  const CoocMatrix* a() const { return has_cooc ? &cooc : nullptr; }
};

LoadedModel load_model(const fs::path& checkpoint, const std::string& cooc_override) {
  require_file(checkpoint, "checkpoint", "run `train` first");
  LoadedModel m;
  m.ckpt = load_checkpoint<float>(checkpoint.string());
  if (m.ckpt.params.dims.mode == EmbeddingMode::kSimEmb) {
    const std::string path = cooc_override.empty() ? m.ckpt.cooc_path : cooc_override;
    require_file(path, "co-occurrence file", "run `cooc` first");
    m.cooc = load_cooc(path);
    m.has_cooc = true;
  }
  return m;
}

std::vector<UserIndex> pick_split(const DatasetSplit& s, const std::string& name) {
  if (name == "test") return s.test;
  if (name == "valid") return s.valid;
  if (name == "train") return s.train;
  fail("unknown split '", name, "' (expected train, valid or test)");
}

// ---------------------------------------------------------------- commands

struct SynthArgs {
  SynthConfig cfg;
  std::string out, labels;
};

void run_synth(const SynthArgs& args) {
  Manifest m("synth");
  auto& c = m.config();
  c["users"] = args.cfg.users;
  c["items"] = args.cfg.items;
  c["groups"] = args.cfg.groups;
  c["length"] = args.cfg.length;
  c["max_groups_per_item"] = args.cfg.max_groups_per_item;
  c["noise"] = args.cfg.noise;
  m.seed("synth", args.cfg.seed);
  const auto data = m.phase("generate", [&] { return generate_synthetic(args.cfg); });
  m.phase("write", [&] {
    viz::save_text(args.out, [&](std::ostream& os) { write_interactions_csv(os, data.records); });
    viz::save_text(args.labels, [&](std::ostream& os) { write_labels(os, data); });
  });
  m.artifact("interactions", args.out);
  m.artifact("labels", args.labels);
  m.dataset(fingerprint({args.out}));
  std::cout << "synth: " << data.records.size() << " interactions, " << args.cfg.users << " users, "
            << args.cfg.items << " items\n";
  m.write(manifest_for(args.out));
}

struct PrepareArgs {
  std::string input, format = "csv", out;
  std::size_t min_count = 5;
  std::uint64_t seed = 42;
};

void run_prepare(const PrepareArgs& args) {
  require_file(args.input, "input", "pass --input");
  InputFormat fmt;
  if (args.format == "csv") fmt = InputFormat::kCsv;
  else if (args.format == "seq-lines") fmt = InputFormat::kSeqLines;
  else fail("unknown format '", args.format, "' (expected csv or seq-lines)");
  Manifest m("prepare");
  m.config()["input"] = args.input;
  m.config()["format"] = args.format;
  m.config()["min_count"] = args.min_count;
  m.seed("split", args.seed);
  m.dataset(fingerprint({args.input}));
  const auto ing = m.phase("ingest", [&] {
    std::ifstream is(args.input);
    return ingest(is, fmt);
  });
  const auto set = m.phase("filter", [&] { return build_sequences(ing.records, args.min_count); });
  const auto split = m.phase("split", [&] { return split_users(set, args.seed); });
  m.phase("write", [&] { save_prepared(args.out, set, split); });
  for (const auto& f : prepared_files(args.out)) m.artifact(f.filename().stem().string(), f);
  auto& r = m.results();
  r["users"] = set.n_users();
  r["items"] = set.n_items();
  r["interactions"] = set.n_interactions();
  r["train_users"] = split.train.size();
  r["valid_users"] = split.valid.size();
  r["test_users"] = split.test.size();
  std::cout << "users " << set.n_users() << " items " << set.n_items() << " interactions " << set.n_interactions()
            << " (train " << split.train.size() << ", valid " << split.valid.size() << ", test "
            << split.test.size() << ")\n";
  m.write(fs::path(args.out) / "prepare.manifest.json");
}

struct CoocArgs {
  std::string prepared, out;
  int threshold = 3;
};

void run_cooc(const CoocArgs& args) {
  const auto data = load_prepared(args.prepared);
  Manifest m("cooc");
  m.config()["prepared"] = args.prepared;
  m.config()["T"] = args.threshold;
  m.dataset(fingerprint(prepared_files(args.prepared)));
  // Training users only, so held-out sequences never leak into A.
  const auto counts = m.phase("count", [&] { return accumulate(data.set, data.split.train, args.threshold); });
  const auto a = m.phase("normalize", [&] { return finalize(counts); });
  m.phase("write", [&] { save_cooc(args.out, a); });
  m.artifact("cooc", args.out);
  m.results()["n_items"] = a.n_items();
  m.results()["nnz"] = a.matrix.nnz();
  m.results()["density"] = a.density;
  std::cout << "cooc: " << a.n_items() << " items, nnz " << a.matrix.nnz() << ", density " << a.density << '\n';
  m.write(manifest_for(args.out));
}

struct TrainArgs {
  std::string prepared, cooc, out;
  ConfigFlags flags;
};

void run_train(const TrainArgs& args, CLI::App* app) {
  const TrainConfig cfg = args.flags.resolve(app);
  const auto data = load_prepared(args.prepared);
  Manifest m("train");
  m.config() = config_json(cfg);
  m.config()["prepared"] = args.prepared;
  m.seed("train", cfg.seed);
  m.dataset(fingerprint(prepared_files(args.prepared)));
  CoocMatrix a;
  std::string cooc_path;
  if (cfg.mode == EmbeddingMode::kSimEmb) {
    cooc_path = args.cooc.empty() ? (fs::path(args.prepared) / ("cooc_T" + std::to_string(cfg.T) + ".bin")).string()
                                  : args.cooc;
    require_file(cooc_path, "co-occurrence file", "run `cooc` first");
    a = load_cooc(cooc_path);
    if (a.threshold != cfg.T) {
      std::cerr << "warning: co-occurrence file was built with T=" << a.threshold << ", config says T=" << cfg.T
                << '\n';
    }
    m.config()["cooc"] = cooc_path;
  }
  const auto res = m.phase("train", [&] {
    return train<float>(cfg, data.set, data.split, cfg.mode == EmbeddingMode::kSimEmb ? &a : nullptr);
  });
  const fs::path out = args.out.empty() ? fs::path(args.prepared) / ("model_" + std::string(to_string(cfg.mode)) + ".ckpt")
                                        : fs::path(args.out);
  m.phase("write", [&] {
    save_checkpoint(out.string(), res.params, cooc_path);
    viz::save_text(out.string() + ".log.csv", [&](std::ostream& os) {
      os << "iteration,loss_ema,valid_recall50,seconds_per_batch\n" << std::setprecision(10);
      for (const auto& e : res.log) {
        os << e.iteration << ',' << e.loss_ema << ',' << e.valid_recall50 << ',' << e.seconds_per_batch << '\n';
      }
    });
  });
  m.artifact("checkpoint", out);
  m.artifact("log", out.string() + ".log.csv");
  m.results()["iterations"] = res.iterations;
  m.results()["best_valid_recall50"] = res.best_valid_recall50;
  m.results()["final_loss_ema"] = res.loss_ema.empty() ? 0.0 : res.loss_ema.back();
  m.results()["mean_seconds_per_batch"] = res.mean_seconds_per_batch;
  std::cout << "train: " << res.iterations << " iterations, best valid Recall@50 " << res.best_valid_recall50
            << ", " << res.mean_seconds_per_batch << " s/batch\n";
  m.write(manifest_for(out));
}

struct EvalArgs {
  std::string checkpoint, prepared, cooc, split = "test", out;
  std::vector<std::size_t> cutoffs = {20, 50};
};

void run_eval(const EvalArgs& args) {
  const auto model = load_model(args.checkpoint, args.cooc);
  const auto data = load_prepared(args.prepared);
  if (model.ckpt.params.dims.n_items != data.set.n_items()) {
    fail("checkpoint has ", model.ckpt.params.dims.n_items, " items, dataset has ", data.set.n_items());
  }
  Manifest m("eval");
  m.config()["checkpoint"] = args.checkpoint;
  m.config()["split"] = args.split;
  m.config()["cutoffs"] = args.cutoffs;
  m.dataset(fingerprint(prepared_files(args.prepared)));
  const auto atlas = m.phase("atlas", [&] { return make_atlas(model.ckpt.params, model.a()); });
  const auto users = pick_split(data.split, args.split);
  const auto report = m.phase("evaluate", [&] {
    return evaluate(model.ckpt.params, atlas, data.set, users, args.cutoffs);
  });
  const std::string json = to_json(report);
  const fs::path out = args.out.empty() ? fs::path(args.checkpoint + "." + args.split + ".json") : fs::path(args.out);
  m.phase("write", [&] { viz::save_text(out.string(), [&](std::ostream& os) { os << json << '\n'; }); });
  m.artifact("report", out);
  m.results() = Json::parse(json);
  std::cout << json << '\n';
  m.write(manifest_for(out));
}

struct VisualizeArgs {
  std::string checkpoint, prepared, cooc, labels, out;
  std::size_t sample = 600, categories = 3, iters = 1000;
  double kappa = 25.0, perplexity = 30.0;
  std::uint64_t seed = 42;
};

void run_visualize(const VisualizeArgs& args) {
  const auto model = load_model(args.checkpoint, args.cooc);
  const auto data = load_prepared(args.prepared);
  require_file(args.labels, "label file", "pass --labels item_key,category");
  Manifest m("visualize");
  m.config()["checkpoint"] = args.checkpoint;
  m.config()["labels"] = args.labels;
  m.config()["sample"] = args.sample;
  m.config()["categories"] = args.categories;
  m.config()["kappa"] = args.kappa;
  m.config()["perplexity"] = args.perplexity;
  m.config()["iters"] = args.iters;
  m.seed("sample", args.seed);
  m.seed("tsne", args.seed);
  m.dataset(fingerprint(prepared_files(args.prepared)));
  std::ifstream lf(args.labels);
  const auto labels = viz::parse_labels(lf);
  Rng rng(args.seed);
  auto items = viz::sample_labeled_items(data.set.ids, labels, args.sample, args.categories, rng);
  const auto atlas = make_atlas(model.ckpt.params, model.a());
  viz::TsneOptions opt;
  opt.perplexity = std::min(args.perplexity, (static_cast<double>(items.size()) - 1.0) / 3.0);
  opt.iters = args.iters;
  opt.exaggeration_iters = std::min(opt.exaggeration_iters, args.iters / 4);
  opt.seed = args.seed;
  const auto proj = m.phase("tsne", [&] { return viz::project_items(atlas.embeddings, items, opt); });
  const auto curve = m.phase("density", [&] { return viz::vmf_density(viz::angles_of(proj.points), args.kappa); });
  const auto grid = m.phase("kde", [&] {
    return viz::gaussian_kde2d(proj.points, viz::scott_bandwidth(proj.points));
  });
  const fs::path dir = args.out.empty() ? fs::path(args.checkpoint + ".viz") : fs::path(args.out);
  fs::create_directories(dir);
  m.phase("write", [&] {
    viz::save_text((dir / "projection.csv").string(), [&](std::ostream& os) {
      viz::write_projection_csv(os, data.set.ids, proj);
    });
    viz::save_text((dir / "density.csv").string(), [&](std::ostream& os) { viz::write_curve_csv(os, curve); });
    viz::save_text((dir / "kde2d.csv").string(), [&](std::ostream& os) { viz::write_grid_csv(os, grid); });
    viz::save_text((dir / "figure.svg").string(), [&](std::ostream& os) { viz::write_svg(os, proj, curve); });
  });
  for (const char* f : {"projection.csv", "density.csv", "kde2d.csv", "figure.svg"}) m.artifact(f, dir / f);
  const double s = viz::sharpness(curve);
  m.results()["points"] = proj.points.size();
  m.results()["sharpness"] = s;
  m.results()["final_kl"] = proj.kl_log.empty() ? 0.0 : proj.kl_log.back().second;
  std::cout << "visualize: " << proj.points.size() << " points, sharpness " << s << '\n';
  m.write(dir / "visualize.manifest.json");
}

struct TheoryArgs {
  std::size_t items = 32, attrs = 8, instances = 1;
  std::uint64_t seed = 42;
  std::string manifest;
};

bool run_theory(const TheoryArgs& args) {
  Manifest m("theory-check");
  m.config()["items"] = args.items;
  m.config()["attrs"] = args.attrs;
  m.config()["instances"] = args.instances;
  m.seed("instances", args.seed);
  Rng rng(args.seed);
  bool ok = true;
  double worst = 0.0;
  m.phase("check", [&] {
    for (std::size_t k = 0; k < args.instances; ++k) {
      const auto a = theory::generate_instance(args.items, args.attrs, rng);
      const auto c = theory::check_instance(a);
      const bool pass = c.product_exact && c.recovery_residual <= 1e-8;
      ok = ok && pass;
      worst = std::max(worst, c.recovery_residual);
      std::cout << (pass ? "PASS" : "FAIL") << " instance " << k << ": product_exact "
                << (c.product_exact ? "yes" : "no") << ", max residual " << c.recovery_residual << ", det(P) "
                << c.det_p << '\n';
    }
  });
  m.results()["pass"] = ok;
  m.results()["max_residual"] = worst;
  m.write(args.manifest);
  return ok;
}

struct BenchArgs {
  std::string prepared, cooc, out;
  std::size_t batches = 50;
  ConfigFlags flags;
};

void run_bench(const BenchArgs& args, CLI::App* app) {
  TrainConfig cfg = args.flags.resolve(app);
  const auto data = load_prepared(args.prepared);
  const std::string cooc_path = args.cooc.empty()
                                    ? (fs::path(args.prepared) / ("cooc_T" + std::to_string(cfg.T) + ".bin")).string()
                                    : args.cooc;
  require_file(cooc_path, "co-occurrence file", "run `cooc` first");
  const auto a = load_cooc(cooc_path);
  Manifest m("bench");
  m.config() = config_json(cfg);
  m.config()["batches"] = args.batches;
  m.config()["cooc"] = cooc_path;
  m.seed("train", cfg.seed);
  m.dataset(fingerprint(prepared_files(args.prepared)));
  cfg.mode = EmbeddingMode::kSimEmb;
  const double simemb = m.phase("simemb", [&] { return time_per_batch<float>(cfg, data.set, data.split, &a, args.batches); });
  cfg.mode = EmbeddingMode::kBaseline;
  const double baseline =
      m.phase("baseline", [&] { return time_per_batch<float>(cfg, data.set, data.split, nullptr, args.batches); });
  m.results()["simemb_seconds_per_batch"] = simemb;
  m.results()["baseline_seconds_per_batch"] = baseline;
  m.results()["ratio"] = simemb / baseline;
  std::cout << "simemb " << simemb << " s/batch, baseline " << baseline << " s/batch, ratio " << simemb / baseline
            << '\n';
  m.write(args.out.empty() ? fs::path(args.prepared) / "bench.manifest.json" : fs::path(args.out));
}

}  // namespace
}  // namespace simrec::cli

int main(int argc, char** argv) {
  using namespace simrec::cli;
  CLI::App app{"Co-occurrence based item embeddings for multi-interest recommendation"};
  app.require_subcommand(1);
  std::string data_dir = default_data_dir();
  app.add_option("--data", data_dir, "data directory (default: $SIMREC_DATA or ./data)");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a planted-cluster interaction dataset");
  synth_cmd->add_option("--users", synth.cfg.users);
  synth_cmd->add_option("--items", synth.cfg.items);
  synth_cmd->add_option("--groups", synth.cfg.groups);
  synth_cmd->add_option("--length", synth.cfg.length);
  synth_cmd->add_option("--max-groups-per-item", synth.cfg.max_groups_per_item);
  synth_cmd->add_option("--noise", synth.cfg.noise);
  synth_cmd->add_option("--seed", synth.cfg.seed);
  synth_cmd->add_option("--out", synth.out, "interactions CSV (default: DATA/synth.csv)");
  synth_cmd->add_option("--labels", synth.labels, "item_key,category file (default: DATA/synth_labels.csv)");

  PrepareArgs prepare;
  auto* prepare_cmd = app.add_subcommand("prepare", "ingest, filter and split interactions");
  prepare_cmd->add_option("--input", prepare.input, "interactions file")->required();
  prepare_cmd->add_option("--format", prepare.format, "csv or seq-lines");
  prepare_cmd->add_option("--min-count", prepare.min_count);
  prepare_cmd->add_option("--seed", prepare.seed, "user split seed");
  prepare_cmd->add_option("--out", prepare.out, "prepared directory (default: DATA/prepared)");

  CoocArgs cooc;
  auto* cooc_cmd = app.add_subcommand("cooc", "build the normalized co-occurrence matrix");
  cooc_cmd->add_option("--prepared", cooc.prepared, "prepared directory (default: DATA/prepared)");
  cooc_cmd->add_option("--T", cooc.threshold, "co-occurrence distance threshold");
  cooc_cmd->add_option("--out", cooc.out, "COOC file (default: PREPARED/cooc_T<T>.bin)");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("--prepared", train_args.prepared, "prepared directory (default: DATA/prepared)");
  train_cmd->add_option("--cooc", train_args.cooc, "COOC file (default: PREPARED/cooc_T<T>.bin)");
  train_cmd->add_option("--out", train_args.out, "checkpoint (default: PREPARED/model_<mode>.ckpt)");
  train_args.flags.attach(train_cmd);

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint)->required();
  eval_cmd->add_option("--prepared", eval_args.prepared, "prepared directory (default: DATA/prepared)");
  eval_cmd->add_option("--cooc", eval_args.cooc, "override the COOC path stored in the checkpoint");
  eval_cmd->add_option("--split", eval_args.split, "train, valid or test");
  eval_cmd->add_option("--cutoffs", eval_args.cutoffs, "ranking cutoffs");
  eval_cmd->add_option("--out", eval_args.out, "JSON report (default: CHECKPOINT.<split>.json)");

  VisualizeArgs vis;
  auto* vis_cmd = app.add_subcommand("visualize", "project item embeddings onto the unit circle");
  vis_cmd->add_option("--checkpoint", vis.checkpoint)->required();
  vis_cmd->add_option("--labels", vis.labels, "item_key,category file")->required();
  vis_cmd->add_option("--prepared", vis.prepared, "prepared directory (default: DATA/prepared)");
  vis_cmd->add_option("--cooc", vis.cooc, "override the COOC path stored in the checkpoint");
  vis_cmd->add_option("--sample", vis.sample);
  vis_cmd->add_option("--categories", vis.categories, "most populous categories to keep (0 = all)");
  vis_cmd->add_option("--kappa", vis.kappa);
  vis_cmd->add_option("--perplexity", vis.perplexity);
  vis_cmd->add_option("--iters", vis.iters);
  vis_cmd->add_option("--seed", vis.seed);
  vis_cmd->add_option("--out", vis.out, "output directory (default: CHECKPOINT.viz)");

  TheoryArgs theory;
  auto* theory_cmd = app.add_subcommand("theory-check", "verify the attribute recovery identity");
  theory_cmd->add_option("--items", theory.items);
  theory_cmd->add_option("--attrs", theory.attrs);
  theory_cmd->add_option("--instances", theory.instances);
  theory_cmd->add_option("--seed", theory.seed);
  theory_cmd->add_option("--manifest", theory.manifest, "manifest path (default: DATA/theory-check.manifest.json)");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "per-batch training time, simemb vs baseline");
  bench_cmd->add_option("--prepared", bench.prepared, "prepared directory (default: DATA/prepared)");
  bench_cmd->add_option("--cooc", bench.cooc, "COOC file (default: PREPARED/cooc_T<T>.bin)");
  bench_cmd->add_option("--batches", bench.batches);
  bench_cmd->add_option("--out", bench.out, "manifest path (default: PREPARED/bench.manifest.json)");
  bench.flags.attach(bench_cmd);

  CLI11_PARSE(app, argc, argv);

  const fs::path data(data_dir);
  auto prepared_or_default = [&](std::string& p) {
    if (p.empty()) p = (data / "prepared").string();
  };
  try {
    if (synth_cmd->parsed()) {
      if (synth.out.empty()) synth.out = (data / "synth.csv").string();
      if (synth.labels.empty()) synth.labels = (data / "synth_labels.csv").string();
      fs::create_directories(fs::path(synth.out).parent_path().empty() ? "." : fs::path(synth.out).parent_path());
      fs::create_directories(fs::path(synth.labels).parent_path().empty() ? "." : fs::path(synth.labels).parent_path());
      run_synth(synth);
    } else if (prepare_cmd->parsed()) {
      if (prepare.out.empty()) prepare.out = (data / "prepared").string();
      run_prepare(prepare);
    } else if (cooc_cmd->parsed()) {
      prepared_or_default(cooc.prepared);
      if (cooc.out.empty()) cooc.out = (fs::path(cooc.prepared) / ("cooc_T" + std::to_string(cooc.threshold) + ".bin")).string();
      run_cooc(cooc);
    } else if (train_cmd->parsed()) {
      prepared_or_default(train_args.prepared);
      run_train(train_args, train_cmd);
    } else if (eval_cmd->parsed()) {
      prepared_or_default(eval_args.prepared);
      run_eval(eval_args);
    } else if (vis_cmd->parsed()) {
      prepared_or_default(vis.prepared);
      run_visualize(vis);
    } else if (theory_cmd->parsed()) {
      if (theory.manifest.empty()) theory.manifest = (data / "theory-check.manifest.json").string();
      return run_theory(theory) ? 0 : 1;
    } else if (bench_cmd->parsed()) {
      prepared_or_default(bench.prepared);
      run_bench(bench, bench_cmd);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
