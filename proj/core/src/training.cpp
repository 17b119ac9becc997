#include "ssgn/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <utility>

#include "ssgn/checkpoint.hpp"
#include "ssgn/error.hpp"
#include "ssgn/optim.hpp"
#include "ssgn/rng.hpp"

namespace ssgn {

TensorPtr bce_loss(const std::vector<TensorPtr>& step_logits,
                   const std::vector<TargetStep>& target) {
  if (step_logits.empty()) throw ShapeError("bce_loss: no steps");
  if (step_logits.size() != target.size()) {
    throw ShapeError("bce_loss: " + std::to_string(step_logits.size()) +
                     " logit rows vs " + std::to_string(target.size()) + " target steps");
  }
  auto X = step_logits.size() == 1 ? step_logits[0] : concat_rows(step_logits);
  auto Y = make_tensor(X->rows, X->cols);
  for (size_t l = 0; l < target.size(); ++l) {
    for (int cls : target[l].positives) {
      if (cls < 0 || cls >= X->cols) {
        throw ShapeError("bce_loss: class " + std::to_string(cls) + " outside " +
                         std::to_string(X->cols) + " logits");
      }
      Y->values[l * X->cols + cls] = 1.0;
    }
  }
  return mean_all(sub(softplus(X), mul(X, Y)));
}

TensorPtr pg_loss(const std::vector<TensorPtr>& step_logits, const DecodedAnswer& decoded,
                  int vocab_size, double reward) {
  if (step_logits.size() != decoded.steps.size()) {
    throw ShapeError("pg_loss: " + std::to_string(step_logits.size()) +
                     " logit rows vs " + std::to_string(decoded.steps.size()) + " steps");
  }
  if (reward == 0.0 || step_logits.empty()) return make_tensor(1, 1);
  std::vector<TensorPtr> terms;
  terms.reserve(step_logits.size());
  for (size_t l = 0; l < step_logits.size(); ++l) {
    const DecodeStep& step = decoded.steps[l];
    const int idx =
        step.source == StepSource::vocab ? step.index : vocab_size + step.index;
    if (idx < 0 || idx >= step_logits[l]->cols) {
      throw ShapeError("pg_loss: selected class " + std::to_string(idx) + " outside " +
                       std::to_string(step_logits[l]->cols) + " logits");
    }
    terms.push_back(softplus(scale(slice_cols(step_logits[l], idx, idx + 1), -1.0)));
  }
  auto joined = terms.size() == 1 ? terms[0] : concat_cols(terms);
  return scale(mean_all(joined), reward);
}

namespace {

struct FlatExample {
  int scene = 0;
  int example = 0;
  std::string id;
};

std::vector<FlatExample> flatten(const std::vector<Scene>& scenes,
                                 const std::vector<std::string>& names) {
  std::vector<FlatExample> flat;
  for (size_t s = 0; s < scenes.size(); ++s) {
    for (size_t e = 0; e < scenes[s].examples.size(); ++e) {
      flat.push_back({static_cast<int>(s), static_cast<int>(e),
                      names[s] + "#" + std::to_string(e)});
    }
  }
  return flat;
}

std::vector<int> epoch_permutation(uint64_t seed, long long epoch, int n) {
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  Rng rng(mix_seed(mix_seed(seed, fnv1a64("shuffle")), static_cast<uint64_t>(epoch)));
  for (int i = n - 1; i > 0; --i) {
    std::swap(perm[i], perm[rng.uniform_int(0, i)]);
  }
  return perm;
}

double max_anls_reward(const std::string& prediction, const std::vector<std::string>& golds) {
  double best = 0.0;
  for (const std::string& gold : golds) best = std::max(best, anls(prediction, gold));
  return best;
}

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Checkpoint snapshot(const RunConfig& cfg, long long step, const Vocabulary& vocab,
                    ParamStore& params, const Adam& adam) {
  Checkpoint ckpt;
  ckpt.step = step;
  ckpt.config_text = cfg.serialize();
  ckpt.vocab_words = vocab.words();
  ckpt.params = params.all();
  ckpt.has_adam = adam.step_count() > 0;
  ckpt.adam_step = adam.step_count();
  ckpt.adam_moments = adam.moments();
  return ckpt;
}

}  // namespace

EvalReport evaluate_scenes(const RunConfig& cfg, ParamStore& params,
                           const Vocabulary& vocab, const std::vector<Scene>& scenes,
                           const std::vector<std::string>& scene_names,
                           std::vector<DecodedAnswer>* decoded_out) {
  Model model(cfg.model, vocab, params);
  Decoder decoder(cfg.model, vocab);

  std::vector<std::pair<std::string, std::string>> predictions;
  std::vector<ExampleRef> refs;

  for (size_t s = 0; s < scenes.size(); ++s) {
    const Scene& scene = scenes[s];
    const SceneGraphs graphs = model.prepare_graphs(scene, cfg.prune);
    for (size_t e = 0; e < scene.examples.size(); ++e) {
      const QAExample& qa = scene.examples[e];
      auto state = model.encode(scene, qa);
      auto [V2, T2] = model.forward_hierarchy(state, graphs);
      auto greedy = decoder.greedy(params, state, V2, T2, scene);
      const std::string id = scene_names[s] + "#" + std::to_string(e);
      predictions.emplace_back(id, greedy.answer.text);
      std::string question;
      for (const std::string& w : qa.question) {
        if (!question.empty()) question += ' ';
        question += w;
      }
      refs.push_back({id, question, qa.answers});
      if (decoded_out) decoded_out->push_back(std::move(greedy.answer));
    }
  }

  return evaluate(predictions, refs, dataset_sparsity(scenes, cfg.prune));
}

Trainer::Trainer(RunConfig cfg) : cfg_(std::move(cfg)) {}

EvalReport Trainer::run() {
  cfg_.model.validate();
  cfg_.prune.validate();
  if (cfg_.data_dir.empty()) throw DataError("train: data_dir is not set");
  if (cfg_.out_dir.empty()) throw DataError("train: out_dir is not set");
  if (cfg_.steps < 0) throw DataError("train: steps must be >= 0");
  if (cfg_.eval_every <= 0) throw DataError("train: eval_every must be positive");
  if (cfg_.lr <= 0.0) throw DataError("train: lr must be positive");
  if (cfg_.lambda < 0.0) throw DataError("train: lambda must be >= 0");

  const Manifest manifest = load_manifest(cfg_.data_dir + "/manifest.json");
  std::vector<Scene> train_scenes = load_split(cfg_.data_dir, manifest, "train");
  std::vector<Scene> val_scenes = load_split(cfg_.data_dir, manifest, "val");
  if (train_scenes.empty()) throw DataError("train: empty train split");
  const std::vector<FlatExample> examples = flatten(train_scenes, manifest.train);
  if (examples.empty()) throw DataError("train: train split has no examples");

  const Vocabulary vocab = build_vocabulary(train_scenes);
  ParamStore params(cfg_.seed);
  Model model(cfg_.model, vocab, params);
  Decoder decoder(cfg_.model, vocab);

  AdamConfig adam_cfg;
  adam_cfg.lr = cfg_.lr;
  adam_cfg.decay = cfg_.lr_decay;
  adam_cfg.milestones = cfg_.milestones;
  Adam adam(adam_cfg);

  long long start_step = 0;
  if (!cfg_.resume.empty()) {
    Checkpoint ckpt = load_checkpoint(cfg_.resume);
    if (ckpt.vocab_words != vocab.words()) {
      throw DataError("train: checkpoint vocabulary does not match the train split");
    }
    for (auto& [name, tensor] : ckpt.params) {
      tensor->requires_grad = true;
      params.put(name, tensor);
    }
    if (ckpt.has_adam) adam.restore(ckpt.adam_step, std::move(ckpt.adam_moments));
    start_step = ckpt.step;
  }
  if (start_step > cfg_.steps) {
    throw DataError("train: checkpoint step " + std::to_string(start_step) +
                    " is past the configured " + std::to_string(cfg_.steps) + " steps");
  }

  std::filesystem::create_directories(cfg_.out_dir);
  {
    std::ofstream config_out(cfg_.out_dir + "/config.txt", std::ios::binary);
    if (!config_out) throw DataError("train: cannot write " + cfg_.out_dir + "/config.txt");
    config_out << cfg_.serialize();
  }

  const std::string csv_path = cfg_.out_dir + "/metrics.csv";
  const bool append = !cfg_.resume.empty() && std::filesystem::exists(csv_path);
  std::ofstream csv(csv_path, append ? std::ios::binary | std::ios::app : std::ios::binary);
  if (!csv) throw DataError("train: cannot write " + csv_path);
  if (!append) csv << "step,lr,bce,pg,total,val_acc,val_anls\n";

  std::vector<SceneGraphs> graphs;
  graphs.reserve(train_scenes.size());
  for (const Scene& scene : train_scenes) {
    graphs.push_back(model.prepare_graphs(scene, cfg_.prune));
  }

  {
    // Materializes every parameter so even a 0-step checkpoint is complete.
    const Scene& scene = train_scenes[examples[0].scene];
    const QAExample& qa = scene.examples[examples[0].example];
    auto state = model.encode(scene, qa);
    auto [V2, T2] = model.forward_hierarchy(state, graphs[examples[0].scene]);
    auto target = align_target(qa.answers[0], vocab, scene.tokens, cfg_.model.max_answer_len);
    decoder.teacher_forced(params, state, V2, T2, target);
  }

  EvalReport last_report;
  double best_acc = -1.0;
  const long long n = static_cast<long long>(examples.size());
  long long perm_epoch = -1;
  std::vector<int> perm;

  for (long long step = start_step + 1; step <= cfg_.steps; ++step) {
    const long long epoch = (step - 1) / n;
    if (epoch != perm_epoch) {
      perm = epoch_permutation(cfg_.seed, epoch, static_cast<int>(n));
      perm_epoch = epoch;
    }
    const FlatExample& ex = examples[perm[(step - 1) % n]];
    const Scene& scene = train_scenes[ex.scene];
    const QAExample& qa = scene.examples[ex.example];

    params.zero_grad();
    auto state = model.encode(scene, qa);
    auto [V2, T2] = model.forward_hierarchy(state, graphs[ex.scene]);
    auto target = align_target(qa.answers[0], vocab, scene.tokens, cfg_.model.max_answer_len);
    auto logits = decoder.teacher_forced(params, state, V2, T2, target);
    auto bce = bce_loss(logits, target);

    auto greedy = decoder.greedy(params, state, V2, T2, scene);
    const double reward = max_anls_reward(greedy.answer.text, qa.answers);
    auto pg = pg_loss(greedy.step_logits, greedy.answer, vocab.size(), reward);
    auto total = add(bce, scale(pg, cfg_.lambda));

    if (!std::isfinite(total->values[0])) {
      throw NumericError("train: non-finite loss at step " + std::to_string(step) +
                         " on example " + ex.id);
    }
    backward(total);
    try {
      adam.step(params);
    } catch (const NumericError& e) {
      throw NumericError("train: step " + std::to_string(step) + " on example " + ex.id +
                         ": " + e.what());
    }

    std::string val_acc_col, val_anls_col;
    if (step % cfg_.eval_every == 0 || step == cfg_.steps) {
      if (!val_scenes.empty()) {
        last_report = evaluate_scenes(cfg_, params, vocab, val_scenes, manifest.val);
        val_acc_col = format_value(last_report.mean_acc);
        val_anls_col = format_value(last_report.mean_anls);
        if (last_report.mean_acc > best_acc) {
          best_acc = last_report.mean_acc;
          save_checkpoint(cfg_.out_dir + "/best.ckpt",
                          snapshot(cfg_, step, vocab, params, adam));
        }
      }
    }
    csv << step << ',' << format_value(adam.lr_at(step)) << ','
        << format_value(bce->values[0]) << ',' << format_value(pg->values[0]) << ','
        << format_value(total->values[0]) << ',' << val_acc_col << ',' << val_anls_col
        << '\n';
  }
  csv.flush();
  if (!csv) throw DataError("train: failed writing " + csv_path);

  save_checkpoint(cfg_.out_dir + "/last.ckpt",
                  snapshot(cfg_, cfg_.steps, vocab, params, adam));
  return last_report;
}

}  // namespace ssgn
