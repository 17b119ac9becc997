#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ssgn/checkpoint.hpp"
#include "ssgn/config.hpp"
#include "ssgn/error.hpp"
#include "ssgn/metrics.hpp"
#include "ssgn/synth.hpp"
#include "ssgn/training.hpp"

namespace {

using nlohmann::ordered_json;
using namespace ssgn;

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  f << content;
  if (!f) throw DataError("failed writing " + path);
}

uint64_t parse_seed(const std::string& text, const std::string& what) {
  if (text.empty()) throw DataError(what + " is empty");
  uint64_t value = 0;
  for (char c : text) {
    if (c < '0' || c > '9') throw DataError(what + " is not an unsigned integer: " + text);
    value = value * 10 + static_cast<uint64_t>(c - '0');
  }
  return value;
}

std::optional<uint64_t> env_seed() {
  const char* env = std::getenv("SSGN_SEED");
  if (!env || !*env) return std::nullopt;
  return parse_seed(env, "SSGN_SEED");
}

/// Layering: defaults < SSGN_SEED < config file < --set pairs. Direct path
/// flags are applied by each command after this returns.
RunConfig assemble_config(const std::string& config_path,
                          const std::vector<std::string>& sets) {
  RunConfig cfg;
  if (auto seed = env_seed()) cfg.seed = *seed;
  if (!config_path.empty()) cfg.apply_text(read_file(config_path));
  for (const std::string& pair : sets) {
    const size_t eq = pair.find('=');
    if (eq == std::string::npos) throw DataError("--set expects key=value, got " + pair);
    cfg.set(pair.substr(0, eq), pair.substr(eq + 1));
  }
  return cfg;
}

std::string histogram_line(const std::map<int, int>& counts) {
  std::string out;
  for (const auto& [value, count] : counts) {
    if (!out.empty()) out += ", ";
    out += std::to_string(value) + " x" + std::to_string(count);
  }
  return out.empty() ? "none" : out;
}

void print_scene_histograms(const std::vector<Scene>& scenes) {
  std::map<int, int> objects, tokens;
  for (const Scene& s : scenes) {
    objects[static_cast<int>(s.objects.size())] += 1;
    tokens[static_cast<int>(s.tokens.size())] += 1;
  }
  std::cout << "objects/scene: " << histogram_line(objects) << "\n";
  std::cout << "tokens/scene:  " << histogram_line(tokens) << "\n";
}

void print_sparsity(const SparsitySummary& s) {
  char line[96];
  std::snprintf(line, sizeof(line),
                "sparsity ratio: otsg %.4f  osg %.4f  tsg %.4f\n", s.otsg, s.osg, s.tsg);
  std::cout << line;
}

SceneGraphs only_graph(const SceneGraphs& graphs, const std::string& which) {
  SceneGraphs out;
  if (which == "otsg") {
    out.otsg_token_to_object = graphs.otsg_token_to_object;
    out.otsg_object_to_token = graphs.otsg_object_to_token;
  } else if (which == "osg") {
    out.osg = graphs.osg;
  } else if (which == "tsg") {
    out.tsg = graphs.tsg;
  } else {
    throw DataError("unknown graph name " + which);
  }
  return out;
}

std::string scene_stem(const std::string& path) {
  std::string name = std::filesystem::path(path).filename().string();
  for (const char* suffix : {".scene.json", ".json"}) {
    const std::string s(suffix);
    if (name.size() > s.size() && name.substr(name.size() - s.size()) == s) {
      return name.substr(0, name.size() - s.size());
    }
  }
  return name;
}

/// Writes one export file per selected graph; returns the written paths.
std::vector<std::string> write_exports(const Scene& scene, const SceneGraphs& graphs,
                                       const std::string& graph_choice,
                                       const std::string& format,
                                       const std::string& scene_path,
                                       const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> names;
  if (graph_choice == "all") {
    names = {"otsg", "osg", "tsg"};
  } else {
    names = {graph_choice};
  }
  const std::string ext = format == "dot" ? ".dot" : ".json";
  std::vector<std::string> written;
  for (const std::string& name : names) {
    const std::string path = out_dir + "/" + scene_stem(scene_path) + "." + name + ext;
    write_file(path, export_graph(scene, only_graph(graphs, name), format));
    written.push_back(path);
  }
  return written;
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir,
              std::optional<uint64_t> seed_flag) {
  const uint64_t seed = seed_flag ? *seed_flag : env_seed().value_or(1);
  const SynthSpec spec = synth_spec_from_json(read_file(spec_path));
  const DatasetSummary summary = write_dataset(seed, spec, out_dir);
  std::cout << "wrote " << summary.scene_count << " scenes to " << out_dir << " (train "
            << summary.train_count << " / val " << summary.val_count << " / test "
            << summary.test_count << ")\n";
  std::vector<Scene> scenes;
  for (const GeneratedScene& g : synth_generate(seed, spec)) scenes.push_back(g.scene);
  print_scene_histograms(scenes);
  return 0;
}

int cmd_prune(const std::string& scene_path, const std::string& config_path,
              const std::vector<std::string>& sets, const std::string& graph_choice,
              const std::string& format, const std::string& out_dir, bool print_stats) {
  RunConfig cfg = assemble_config(config_path, sets);
  cfg.prune.validate();
  const Scene scene = load_scene_file(scene_path);
  const SceneGraphs graphs = build_scene_graphs(scene, cfg.prune);
  if (print_stats) print_sparsity(dataset_sparsity({scene}, cfg.prune));
  const auto written =
      write_exports(scene, graphs, graph_choice, format, scene_path, out_dir);
  write_file(out_dir + "/config.txt", cfg.serialize());
  for (const std::string& path : written) std::cout << "wrote " << path << "\n";
  return 0;
}

int cmd_stats(const std::string& data_dir, const std::string& config_path,
              const std::vector<std::string>& sets) {
  RunConfig cfg = assemble_config(config_path, sets);
  cfg.prune.validate();
  const Manifest manifest = load_manifest(data_dir + "/manifest.json");
  std::vector<Scene> all;
  int example_count = 0;
  for (const std::string split : {"train", "val", "test"}) {
    std::vector<Scene> scenes = load_split(data_dir, manifest, split);
    int split_examples = 0;
    for (const Scene& s : scenes) split_examples += static_cast<int>(s.examples.size());
    std::cout << split << ": " << scenes.size() << " scenes, " << split_examples
              << " examples\n";
    example_count += split_examples;
    for (Scene& s : scenes) all.push_back(std::move(s));
  }
  if (all.empty()) throw DataError("stats: dataset " + data_dir + " has no scenes");
  std::cout << "total: " << all.size() << " scenes, " << example_count << " examples\n";
  print_scene_histograms(all);
  print_sparsity(dataset_sparsity(all, cfg.prune));
  return 0;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& sets,
              std::optional<uint64_t> seed_flag, const std::string& data_dir,
              const std::string& out_dir, const std::string& resume, long long steps) {
  RunConfig cfg = assemble_config(config_path, sets);
  if (seed_flag) cfg.seed = *seed_flag;
  if (!data_dir.empty()) cfg.data_dir = data_dir;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (!resume.empty()) cfg.resume = resume;
  if (steps >= 0) cfg.steps = steps;

  Trainer trainer(cfg);
  const EvalReport report = trainer.run();
  std::cout << "trained " << cfg.steps << " steps; checkpoints in " << cfg.out_dir << "\n";
  if (report.examples.empty()) {
    std::cout << "no validation results\n";
  } else {
    std::cout << report.to_table();
  }
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::vector<std::string>& sets,
             const std::string& data_dir, const std::string& split,
             const std::string& out_dir) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  RunConfig cfg = RunConfig::from_text(ckpt.config_text);
  for (const std::string& pair : sets) {
    const size_t eq = pair.find('=');
    if (eq == std::string::npos) throw DataError("--set expects key=value, got " + pair);
    cfg.set(pair.substr(0, eq), pair.substr(eq + 1));
  }
  if (!data_dir.empty()) cfg.data_dir = data_dir;
  if (cfg.data_dir.empty()) throw DataError("eval: data_dir is not set");
  cfg.model.validate();
  cfg.prune.validate();

  const Vocabulary vocab(ckpt.vocab_words);
  ParamStore params(cfg.seed);
  for (const auto& [name, tensor] : ckpt.params) params.put(name, tensor);

  const Manifest manifest = load_manifest(cfg.data_dir + "/manifest.json");
  const std::vector<Scene> scenes = load_split(cfg.data_dir, manifest, split);
  if (scenes.empty()) throw DataError("eval: split " + split + " is empty");
  const std::vector<std::string>& names = split == "train"
                                              ? manifest.train
                                              : (split == "val" ? manifest.val
                                                                : manifest.test);

  std::vector<DecodedAnswer> decoded;
  const EvalReport report = evaluate_scenes(cfg, params, vocab, scenes, names, &decoded);

  ordered_json preds = ordered_json::array();
  size_t k = 0;
  for (const Scene& scene : scenes) {
    for (size_t e = 0; e < scene.examples.size(); ++e, ++k) {
      const ExampleResult& r = report.examples[k];
      ordered_json rec;
      rec["id"] = r.id;
      rec["question"] = r.question;
      rec["prediction"] = r.prediction;
      rec["golds"] = r.golds;
      rec["steps"] = ordered_json::array();
      for (const DecodeStep& step : decoded[k].steps) {
        ordered_json s;
        s["source"] = step.source == StepSource::vocab ? "vocab" : "token";
        s["index"] = step.index;
        s["word"] = step.source == StepSource::vocab ? vocab.word(step.index)
                                                     : scene.tokens[step.index].label;
        rec["steps"].push_back(std::move(s));
      }
      preds.push_back(std::move(rec));
    }
  }

  std::filesystem::create_directories(out_dir);
  write_file(out_dir + "/report.json", report.to_json());
  write_file(out_dir + "/predictions.json", preds.dump(2) + "\n");
  write_file(out_dir + "/config.txt", cfg.serialize());
  std::cout << report.to_table();
  std::cout << "wrote " << out_dir << "/report.json\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse spatial graph network for text-based visual QA"};
  app.require_subcommand(1);

  std::string spec_path, scene_path, config_path, data_dir, out_dir, resume, ckpt_path;
  std::string graph_choice = "all", format = "json", split = "val";
  std::vector<std::string> sets;
  uint64_t seed_value = 0;
  long long steps = -1;

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--spec", spec_path, "generator spec JSON")->required();
  synth->add_option("--out", out_dir, "dataset output directory")->required();
  auto* synth_seed = synth->add_option("--seed", seed_value, "generator seed");

  auto add_config_opts = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "run config file");
    cmd->add_option("--set", sets, "override one config key (key=value)");
  };

  auto* prune = app.add_subcommand("prune", "prune one scene and export its graphs");
  prune->add_option("--scene", scene_path, "scene JSON file")->required();
  add_config_opts(prune);
  prune->add_option("--graph", graph_choice, "graph to export")
      ->check(CLI::IsMember({"otsg", "osg", "tsg", "all"}));
  prune->add_option("--format", format, "export format")
      ->check(CLI::IsMember({"json", "dot"}));
  prune->add_option("--out", out_dir, "export output directory")->default_val(".");

  auto* exportg = app.add_subcommand("export-graph", "export pruned graphs of one scene");
  exportg->add_option("--scene", scene_path, "scene JSON file")->required();
  add_config_opts(exportg);
  exportg->add_option("--graph", graph_choice, "graph to export")
      ->check(CLI::IsMember({"otsg", "osg", "tsg", "all"}));
  exportg->add_option("--format", format, "export format")
      ->check(CLI::IsMember({"json", "dot"}));
  exportg->add_option("--out", out_dir, "export output directory")->default_val(".");

  auto* stats = app.add_subcommand("stats", "dataset summary and sparsity ratios");
  stats->add_option("--data", data_dir, "dataset directory")->required();
  add_config_opts(stats);

  auto* train = app.add_subcommand("train", "train a model");
  add_config_opts(train);
  auto* train_seed = train->add_option("--seed", seed_value, "run seed");
  train->add_option("--data", data_dir, "dataset directory");
  train->add_option("--out", out_dir, "run output directory");
  train->add_option("--resume", resume, "checkpoint to continue from");
  train->add_option("--steps", steps, "total optimization steps")
      ->check(CLI::NonNegativeNumber);

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on one split");
  eval->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  eval->add_option("--set", sets, "override one config key (key=value)");
  eval->add_option("--data", data_dir, "dataset directory (defaults to checkpoint's)");
  eval->add_option("--split", split, "dataset split")
      ->check(CLI::IsMember({"train", "val", "test"}));
  eval->add_option("--out", out_dir, "report output directory")->default_val(".");

  try {
    app.parse(argc, argv);
    if (synth->parsed()) {
      return cmd_synth(spec_path, out_dir,
                       synth_seed->count() ? std::optional<uint64_t>(seed_value)
                                           : std::nullopt);
    }
    if (prune->parsed()) {
      return cmd_prune(scene_path, config_path, sets, graph_choice, format, out_dir, true);
    }
    if (exportg->parsed()) {
      return cmd_prune(scene_path, config_path, sets, graph_choice, format, out_dir, false);
    }
    if (stats->parsed()) return cmd_stats(data_dir, config_path, sets);
    if (train->parsed()) {
      return cmd_train(config_path, sets,
                       train_seed->count() ? std::optional<uint64_t>(seed_value)
                                           : std::nullopt,
                       data_dir, out_dir, resume, steps);
    }
    if (eval->parsed()) return cmd_eval(ckpt_path, sets, data_dir, split, out_dir);
    std::cerr << "error: no subcommand\n";
    return 1;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
