#ifndef SSGN_SYNTH_HPP
#define SSGN_SYNTH_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ssgn/scene.hpp"

namespace ssgn {

/// Layout families:
///  - signs-grid: labeled sign objects on a grid, answer tokens inside them.
///  - storefront-rows: token lines of uniform height near one banner object,
///    plus far distractor tokens (>= 0.6 * image diagonal away from every
///    row token).
///  - duplicate-boxes: signs-grid plus near-coincident copies of each object
///    box (jitter <= 2 px).
///  - mixed: round-robin over the three families.
struct SynthSpec {
  int scenes = 10;
  double image_w = 800.0;
  double image_h = 600.0;
  int objects_min = 3;
  int objects_max = 5;
  int tokens_min = 4;
  int tokens_max = 8;
  std::string layout = "signs-grid";
  int feature_dim = 16;
  int answer_tokens = 1;        // tokens per answer span (1 or 2)
  int answers_per_example = 1;  // 1, or 10 with annotator noise
  bool ask_all_objects = false;  // sign layouts: one example per sign
  double annotator_noise = 0.0;
  double duplicate_jitter_px = 1.0;
  double train_frac = 0.8;
  double val_frac = 0.1;
  double test_frac = 0.1;
  std::vector<std::string> object_labels;  // defaults when empty
  std::vector<std::string> token_words;
};

SynthSpec synth_spec_from_json(const std::string& json_text);
std::string synth_spec_to_json(const SynthSpec& spec);

/// A generated scene plus the pair plantings the layout made, for
/// verification: ordered index pairs into scene.objects / scene.tokens.
struct GeneratedScene {
  Scene scene;
  std::string layout;
  std::vector<std::pair<int, int>> duplicate_object_pairs;
  std::vector<std::pair<int, int>> far_token_pairs;
};

/// Deterministic: scene i is a pure function of (seed, i, spec).
std::vector<GeneratedScene> synth_generate(uint64_t seed, const SynthSpec& spec);

/// Appearance surrogate: pseudo-random vector seeded by the label string
/// alone, so identical labels always share features.
std::vector<double> label_feature(const std::string& label, int dim);

struct DatasetSummary {
  int scene_count = 0;
  int train_count = 0;
  int val_count = 0;
  int test_count = 0;
  int total_objects = 0;
  int total_tokens = 0;
};

/// Writes <out_dir>/scene_%05d.scene.json files plus manifest.json.
DatasetSummary write_dataset(uint64_t seed, const SynthSpec& spec,
                             const std::string& out_dir);

}  // namespace ssgn

#endif  // SSGN_SYNTH_HPP
