#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "ssgn/decoder.hpp"
#include "ssgn/geometry.hpp"
#include "ssgn/graph.hpp"
#include "ssgn/metrics.hpp"
#include "ssgn/model.hpp"
#include "ssgn/rng.hpp"
#include "ssgn/synth.hpp"
#include "ssgn/training.hpp"

namespace {

using namespace ssgn;

std::vector<std::pair<BoundingBox, BoundingBox>> box_pairs(int count) {
  Rng rng(7);
  std::vector<std::pair<BoundingBox, BoundingBox>> out;
  for (int i = 0; i < count; ++i) {
    const double x0 = rng.uniform(0, 700), y0 = rng.uniform(0, 500);
    const double x1 = rng.uniform(0, 700), y1 = rng.uniform(0, 500);
    out.push_back({{x0, y0, x0 + rng.uniform(5, 120), y0 + rng.uniform(5, 80)},
                   {x1, y1, x1 + rng.uniform(5, 120), y1 + rng.uniform(5, 80)}});
  }
  return out;
}

Scene desk_scene(int objects, int tokens, int feature_dim) {
  Rng rng(11);
  Scene s;
  s.image_width = 800.0;
  s.image_height = 600.0;
  const std::vector<std::string> labels = {"menu", "board", "exit", "banner"};
  const std::vector<std::string> words = {"stop", "open", "sale", "fresh", "cash"};
  auto feat = [&]() {
    std::vector<double> f(feature_dim);
    for (double& v : f) v = rng.uniform(-1, 1);
    return f;
  };
  int id = 0;
  for (int i = 0; i < objects; ++i, ++id) {
    const double x = rng.uniform(0, 650), y = rng.uniform(0, 470);
    s.objects.push_back({id, EntityKind::object,
                         {x, y, x + rng.uniform(40, 150), y + rng.uniform(30, 120)},
                         labels[i % labels.size()], feat()});
  }
  for (int i = 0; i < tokens; ++i, ++id) {
    const double x = rng.uniform(0, 720), y = rng.uniform(0, 560);
    s.tokens.push_back({id, EntityKind::token,
                        {x, y, x + rng.uniform(15, 80), y + rng.uniform(8, 30)},
                        words[i % words.size()], feat()});
  }
  s.examples.push_back({{"what", "does", "menu", "say"}, {"stop"}});
  return s;
}

void BM_IouFamily(benchmark::State& state) {
  const auto kind = static_cast<IouKind>(state.range(0));
  const auto pairs = box_pairs(512);
  size_t i = 0;
  for (auto _ : state) {
    const auto& [a, b] = pairs[i++ & 511];
    benchmark::DoNotOptimize(iou_family(kind, a, b));
  }
}
BENCHMARK(BM_IouFamily)
    ->Arg(static_cast<int>(IouKind::IoU))
    ->Arg(static_cast<int>(IouKind::GIoU))
    ->Arg(static_cast<int>(IouKind::DIoU))
    ->Arg(static_cast<int>(IouKind::CIoU));

void BM_EdgeFeature(benchmark::State& state) {
  const auto pairs = box_pairs(512);
  size_t i = 0;
  for (auto _ : state) {
    const auto& [a, b] = pairs[i++ & 511];
    benchmark::DoNotOptimize(edge_feature(a, b));
  }
}
BENCHMARK(BM_EdgeFeature);

void BM_BuildSceneGraphs(benchmark::State& state) {
  const Scene scene =
      desk_scene(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), 8);
  const PruneConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_scene_graphs(scene, cfg));
  }
  state.SetLabel(std::to_string(state.range(0)) + " objects, " +
                 std::to_string(state.range(1)) + " tokens");
}
BENCHMARK(BM_BuildSceneGraphs)->Args({10, 15})->Args({50, 30})->Args({100, 50});

void BM_Levenshtein(benchmark::State& state) {
  Rng rng(3);
  const int len = static_cast<int>(state.range(0));
  std::string a, b;
  for (int i = 0; i < len; ++i) {
    a += static_cast<char>('a' + rng.uniform_int(0, 25));
    b += static_cast<char>('a' + rng.uniform_int(0, 25));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(levenshtein(a, b));
  }
}
BENCHMARK(BM_Levenshtein)->Arg(10)->Arg(40);

struct ModelFixture {
  Scene scene;
  ModelConfig cfg;
  Vocabulary vocab;
  ParamStore params;
  Model model;
  Decoder decoder;
  SceneGraphs graphs;

  explicit ModelFixture(int objects, int tokens)
      : scene(desk_scene(objects, tokens, 32)),
        cfg(),
        vocab(build_vocabulary({scene})),
        params(21),
        model(cfg, vocab, params),
        decoder(cfg, vocab),
        graphs(model.prepare_graphs(scene, PruneConfig{})) {}
};

void BM_EncodeHierarchy(benchmark::State& state) {
  ModelFixture fx(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const QAExample& qa = fx.scene.examples[0];
  for (auto _ : state) {
    auto enc = fx.model.encode(fx.scene, qa);
    benchmark::DoNotOptimize(fx.model.forward_hierarchy(enc, fx.graphs));
  }
}
BENCHMARK(BM_EncodeHierarchy)->Args({5, 8})->Args({20, 30});

void BM_GreedyDecode(benchmark::State& state) {
  ModelFixture fx(5, 8);
  const QAExample& qa = fx.scene.examples[0];
  auto enc = fx.model.encode(fx.scene, qa);
  auto [V2, T2] = fx.model.forward_hierarchy(enc, fx.graphs);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fx.decoder.greedy(fx.params, enc, V2, T2, fx.scene));
  }
}
BENCHMARK(BM_GreedyDecode);

void BM_TrainStep(benchmark::State& state) {
  ModelFixture fx(5, 8);
  const QAExample& qa = fx.scene.examples[0];
  const auto target =
      align_target(qa.answers[0], fx.vocab, fx.scene.tokens, fx.cfg.max_answer_len);
  Adam adam({});
  for (auto _ : state) {
    fx.params.zero_grad();
    auto enc = fx.model.encode(fx.scene, qa);
    auto [V2, T2] = fx.model.forward_hierarchy(enc, fx.graphs);
    auto logits = fx.decoder.teacher_forced(fx.params, enc, V2, T2, target);
    auto bce = bce_loss(logits, target);
    auto greedy = fx.decoder.greedy(fx.params, enc, V2, T2, fx.scene);
    double reward = 0.0;
    for (const std::string& gold : qa.answers) {
      reward = std::max(reward, anls(greedy.answer.text, gold));
    }
    auto total = add(bce, scale(pg_loss(greedy.step_logits, greedy.answer,
                                        fx.vocab.size(), reward),
                                1.0));
    backward(total);
    adam.step(fx.params);
    benchmark::DoNotOptimize(total->values[0]);
  }
}
BENCHMARK(BM_TrainStep);

}  // namespace

BENCHMARK_MAIN();
