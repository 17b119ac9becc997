#include "ssgn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <json.hpp>

#include "ssgn/error.hpp"
#include "ssgn/rng.hpp"

namespace ssgn {

namespace {

using json = nlohmann::ordered_json;

const std::vector<std::string>& default_object_labels() {
  static const std::vector<std::string> kLabels = {
      "exit",   "menu",   "board",  "banner", "poster",  "plate",
      "badge",  "panel",  "arrow",  "notice", "marquee", "placard"};
  return kLabels;
}

const std::vector<std::string>& default_token_words() {
  static const std::vector<std::string> kWords = {
      "stop",  "open",  "closed", "sale",   "fresh",  "left",   "right",
      "north", "south", "coffee", "pizza",  "books",  "shoes",  "music",
      "hotel", "cash",  "only",   "daily",  "free",   "parking", "beer",
      "wine",  "bread", "milk",   "soap",   "paint",  "tools",  "glass",
      "paper", "green", "blue",   "red",    "gold",   "silver", "main",
      "first", "second", "king",  "queen",  "plaza"};
  return kWords;
}

void shuffle(std::vector<int>& v, Rng& rng) {
  for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
    std::swap(v[i], v[rng.uniform_int(0, i)]);
  }
}

std::vector<std::string> pick_distinct(const std::vector<std::string>& pool, int n,
                                       Rng& rng, const char* what) {
  if (n > static_cast<int>(pool.size())) {
    throw DataError(std::string("synth: need ") + std::to_string(n) + " distinct " +
                    what + " but pool has " + std::to_string(pool.size()));
  }
  std::vector<int> idx(pool.size());
  for (size_t i = 0; i < pool.size(); ++i) idx[i] = static_cast<int>(i);
  shuffle(idx, rng);
  std::vector<std::string> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(pool[idx[i]]);
  return out;
}

void validate_spec(const SynthSpec& s) {
  if (s.scenes < 1) throw DataError("synth: scenes must be >= 1");
  if (s.image_w <= 0 || s.image_h <= 0) throw DataError("synth: image size must be positive");
  if (s.objects_min < 1 || s.objects_min > s.objects_max) {
    throw DataError("synth: bad objects_min/objects_max");
  }
  if (s.tokens_min < 1 || s.tokens_min > s.tokens_max) {
    throw DataError("synth: bad tokens_min/tokens_max");
  }
  if (s.feature_dim < 1) throw DataError("synth: feature_dim must be >= 1");
  if (s.answer_tokens != 1 && s.answer_tokens != 2) {
    throw DataError("synth: answer_tokens must be 1 or 2");
  }
  if (s.answers_per_example < 1 || s.answers_per_example > 10) {
    throw DataError("synth: answers_per_example must be in [1,10]");
  }
  if (s.annotator_noise < 0.0 || s.annotator_noise > 1.0) {
    throw DataError("synth: annotator_noise must be in [0,1]");
  }
  if (s.duplicate_jitter_px <= 0.0 || s.duplicate_jitter_px > 2.0) {
    throw DataError("synth: duplicate_jitter_px must be in (0,2]");
  }
  if (s.train_frac < 0 || s.val_frac < 0 || s.test_frac < 0 ||
      s.train_frac + s.val_frac + s.test_frac > 1.0 + 1e-9) {
    throw DataError("synth: split fractions must be nonnegative and sum to <= 1");
  }
  if (s.layout != "signs-grid" && s.layout != "storefront-rows" &&
      s.layout != "duplicate-boxes" && s.layout != "mixed") {
    throw DataError("synth: unknown layout " + s.layout);
  }
}

const std::vector<std::string>& object_pool(const SynthSpec& s) {
  return s.object_labels.empty() ? default_object_labels() : s.object_labels;
}
const std::vector<std::string>& token_pool(const SynthSpec& s) {
  return s.token_words.empty() ? default_token_words() : s.token_words;
}

Entity make_object(int id, const std::string& label, const BoundingBox& box,
                   const SynthSpec& spec) {
  return Entity{id, EntityKind::object, box, label, label_feature(label, spec.feature_dim)};
}
Entity make_token(int id, const std::string& label, const BoundingBox& box,
                  const SynthSpec& spec) {
  return Entity{id, EntityKind::token, box, label, label_feature(label, spec.feature_dim)};
}

std::string join_labels(const std::vector<std::string>& words) {
  std::string out;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

/// "what does the <label> say" plus the answers list (first entry is always
/// the true answer; later entries may be flipped to annotator noise).
QAExample make_copy_question(const std::string& object_label, const std::string& answer,
                             const SynthSpec& spec, Rng& rng) {
  QAExample qa;
  qa.question = {"what", "does", "the", object_label, "say"};
  qa.answers.push_back(answer);
  const auto& pool = token_pool(spec);
  for (int i = 1; i < spec.answers_per_example; ++i) {
    if (rng.uniform() < spec.annotator_noise) {
      qa.answers.push_back(pool[rng.uniform_int(0, static_cast<int>(pool.size()) - 1)]);
    } else {
      qa.answers.push_back(answer);
    }
  }
  return qa;
}

struct GridCell {
  double x, y;
};

/// Distinct jittered cell origins for sign placement; errors when the image
/// cannot host the requested count.
std::vector<GridCell> grid_cells(int n, const SynthSpec& spec, Rng& rng,
                                 const char* layout_name) {
  const double margin = 16.0, cell_w = 170.0, cell_h = 130.0;
  const double sign_w = 120.0, sign_h = 80.0;
  const int cols = static_cast<int>((spec.image_w - 2 * margin) / cell_w);
  const int rows = static_cast<int>((spec.image_h - 2 * margin) / cell_h);
  if (cols < 1 || rows < 1 || n > cols * rows) {
    throw DataError(std::string("synth: layout ") + layout_name + " cannot fit " +
                    std::to_string(n) + " objects in a " +
                    std::to_string(static_cast<int>(spec.image_w)) + "x" +
                    std::to_string(static_cast<int>(spec.image_h)) + " image");
  }
  std::vector<int> cells(cols * rows);
  for (size_t i = 0; i < cells.size(); ++i) cells[i] = static_cast<int>(i);
  shuffle(cells, rng);
  std::vector<GridCell> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) {
    const int cx = cells[k] % cols, cy = cells[k] / cols;
    const double jx = rng.uniform(0.0, cell_w - sign_w - 8.0);
    const double jy = rng.uniform(0.0, cell_h - sign_h - 8.0);
    out.push_back({margin + cx * cell_w + jx, margin + cy * cell_h + jy});
  }
  return out;
}

constexpr double kSignW = 120.0, kSignH = 80.0;
constexpr double kTokW = 52.0, kTokH = 22.0;

/// Tokens placed inside a sign box, left to right.
std::vector<BoundingBox> sign_token_boxes(const GridCell& c, int count) {
  std::vector<BoundingBox> out;
  if (count == 1) {
    out.emplace_back(c.x + 34, c.y + 29, c.x + 34 + kTokW, c.y + 29 + kTokH);
  } else {
    out.emplace_back(c.x + 6, c.y + 29, c.x + 6 + kTokW, c.y + 29 + kTokH);
    out.emplace_back(c.x + 62, c.y + 29, c.x + 62 + kTokW, c.y + 29 + kTokH);
  }
  return out;
}

void gen_signs_grid(GeneratedScene& g, const SynthSpec& spec, Rng& rng,
                    bool with_duplicates) {
  Scene& s = g.scene;
  const int n_signs = rng.uniform_int(spec.objects_min, spec.objects_max);
  const auto cells = grid_cells(n_signs, spec, rng,
                                with_duplicates ? "duplicate-boxes" : "signs-grid");
  const auto labels = pick_distinct(object_pool(spec), n_signs, rng, "object labels");
  const auto words =
      pick_distinct(token_pool(spec), n_signs * spec.answer_tokens, rng, "token words");

  int next_id = 0;
  std::vector<int> sign_object_index(n_signs);
  for (int k = 0; k < n_signs; ++k) {
    const BoundingBox base(cells[k].x, cells[k].y, cells[k].x + kSignW, cells[k].y + kSignH);
    sign_object_index[k] = static_cast<int>(s.objects.size());
    s.objects.push_back(make_object(next_id++, labels[k], base, spec));
    if (with_duplicates) {
      const int extra = rng.uniform_int(1, 2);
      const int group_start = sign_object_index[k];
      const double j = spec.duplicate_jitter_px;
      for (int e = 0; e < extra; ++e) {
        const BoundingBox dup(base.x_tl + rng.uniform(-j, j), base.y_tl + rng.uniform(-j, j),
                              base.x_br + rng.uniform(-j, j), base.y_br + rng.uniform(-j, j));
        s.objects.push_back(make_object(next_id++, labels[k], dup, spec));
      }
      const int group_end = static_cast<int>(s.objects.size());
      for (int a = group_start; a < group_end; ++a) {
        for (int b = group_start; b < group_end; ++b) {
          if (a != b) g.duplicate_object_pairs.emplace_back(a, b);
        }
      }
    }
  }

  std::vector<std::vector<std::string>> sign_words(n_signs);
  for (int k = 0; k < n_signs; ++k) {
    const auto boxes = sign_token_boxes(cells[k], spec.answer_tokens);
    for (int t = 0; t < spec.answer_tokens; ++t) {
      const std::string& w = words[k * spec.answer_tokens + t];
      sign_words[k].push_back(w);
      s.tokens.push_back(make_token(next_id++, w, boxes[t], spec));
    }
  }

  if (spec.ask_all_objects) {
    for (int k = 0; k < n_signs; ++k) {
      s.examples.push_back(
          make_copy_question(labels[k], join_labels(sign_words[k]), spec, rng));
    }
  } else {
    const int ask = rng.uniform_int(0, n_signs - 1);
    s.examples.push_back(
        make_copy_question(labels[ask], join_labels(sign_words[ask]), spec, rng));
  }
}

void gen_storefront_rows(GeneratedScene& g, const SynthSpec& spec, Rng& rng) {
  Scene& s = g.scene;
  const double margin = 16.0;
  const double d_img = std::hypot(spec.image_w, spec.image_h);

  const int n_tokens = rng.uniform_int(spec.tokens_min, spec.tokens_max);
  const int n_distractors = n_tokens >= 5 ? rng.uniform_int(1, 2) : 1;
  const int n_row = std::max(spec.answer_tokens + 1, n_tokens - n_distractors);

  const auto banner_label = pick_distinct(object_pool(spec), 1, rng, "object labels")[0];
  const auto words =
      pick_distinct(token_pool(spec), n_row + n_distractors, rng, "token words");

  // Banner object above the token rows.
  const BoundingBox banner(margin, margin, margin + 140.0, margin + 34.0);
  s.objects.push_back(make_object(0, banner_label, banner, spec));

  // Token rows: uniform height, small gaps, at most 3 per row.
  const double row_h = 20.0, row_y0 = margin + 44.0, row_step = 30.0;
  int next_id = 1;
  std::vector<std::pair<int, int>> row_of;  // (row, column) per row token
  std::vector<int> row_token_index;
  double max_x_br = 0.0, max_y_br = 0.0;
  for (int t = 0; t < n_row; ++t) {
    const int row = t / 3, col = t % 3;
    if (col == 0) max_x_br = margin;
    const double w = rng.uniform(40.0, 60.0);
    const double gap = col == 0 ? 0.0 : rng.uniform(4.0, 12.0);
    const double x0 = (col == 0 ? margin : max_x_br + gap);
    const double y0 = row_y0 + row * row_step;
    const BoundingBox box(x0, y0, x0 + w, y0 + row_h);
    row_token_index.push_back(static_cast<int>(s.tokens.size()));
    row_of.emplace_back(row, col);
    s.tokens.push_back(make_token(next_id++, words[t], box, spec));
    max_x_br = box.x_br;
    max_y_br = std::max(max_y_br, box.y_br);
  }
  double region_x_br = 0.0;
  for (int i : row_token_index) region_x_br = std::max(region_x_br, s.tokens[i].box.x_br);

  // Distractors at the far corner; taller than the rows but inside the
  // height-ratio window, so only the distance clause separates them.
  const double dis_w = 50.0, dis_h = 34.0;
  for (int d = 0; d < n_distractors; ++d) {
    const double x1 = spec.image_w - margin - d * (dis_w + 12.0);
    const double y1 = spec.image_h - margin;
    const BoundingBox box(x1 - dis_w, y1 - dis_h, x1, y1);
    const int di = static_cast<int>(s.tokens.size());
    s.tokens.push_back(make_token(next_id++, words[n_row + d], box, spec));
    for (int ri : row_token_index) {
      const double gap = gap_distance(s.tokens[ri].box, box);
      if (gap < 0.6 * d_img) {
        throw DataError("synth: storefront-rows cannot satisfy the far-distractor "
                        "constraint at this image size; enlarge the image or reduce "
                        "token counts");
      }
      g.far_token_pairs.emplace_back(ri, di);
      g.far_token_pairs.emplace_back(di, ri);
    }
  }

  // The question asks about the banner; the answer is the row span starting
  // at the token nearest to it.
  int nearest = row_token_index[0];
  double best = center_distance(banner, s.tokens[nearest].box);
  for (int i : row_token_index) {
    const double dist = center_distance(banner, s.tokens[i].box);
    if (dist < best) {
      best = dist;
      nearest = i;
    }
  }
  int start = nearest;
  if (spec.answer_tokens == 2) {
    const auto [row, col] = row_of[start];
    const int row_len = static_cast<int>(
        std::count_if(row_of.begin(), row_of.end(),
                      [row](const auto& rc) { return rc.first == row; }));
    if (col == row_len - 1) start -= 1;  // keep the span inside the row
  }
  std::vector<std::string> answer_words;
  for (int t = 0; t < spec.answer_tokens; ++t) {
    answer_words.push_back(s.tokens[start + t].label);
  }
  s.examples.push_back(
      make_copy_question(banner_label, join_labels(answer_words), spec, rng));
}

GeneratedScene generate_one(uint64_t seed, int index, const SynthSpec& spec) {
  Rng rng(mix_seed(seed, static_cast<uint64_t>(index)));
  GeneratedScene g;
  g.scene.image_width = spec.image_w;
  g.scene.image_height = spec.image_h;

  std::string layout = spec.layout;
  if (layout == "mixed") {
    static const char* kCycle[3] = {"signs-grid", "storefront-rows", "duplicate-boxes"};
    layout = kCycle[index % 3];
  }
  g.layout = layout;

  if (layout == "signs-grid") {
    gen_signs_grid(g, spec, rng, false);
  } else if (layout == "duplicate-boxes") {
    gen_signs_grid(g, spec, rng, true);
  } else {
    gen_storefront_rows(g, spec, rng);
  }

  if (static_cast<int>(g.scene.objects.size()) > 100 ||
      static_cast<int>(g.scene.tokens.size()) > 50) {
    throw DataError("synth: entity counts exceed the N=100/M=50 caps");
  }
  return g;
}

}  // namespace

std::vector<double> label_feature(const std::string& label, int dim) {
  Rng rng(fnv1a64(label));
  std::vector<double> out(dim);
  for (int i = 0; i < dim; ++i) out[i] = rng.uniform(-1.0, 1.0);
  return out;
}

std::vector<GeneratedScene> synth_generate(uint64_t seed, const SynthSpec& spec) {
  validate_spec(spec);
  std::vector<GeneratedScene> out;
  out.reserve(spec.scenes);
  for (int i = 0; i < spec.scenes; ++i) out.push_back(generate_one(seed, i, spec));
  return out;
}

SynthSpec synth_spec_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("synth spec: malformed JSON: ") + e.what());
  }
  SynthSpec s;
  for (const auto& [key, value] : j.items()) {
    if (key == "scenes") s.scenes = value.get<int>();
    else if (key == "image_w") s.image_w = value.get<double>();
    else if (key == "image_h") s.image_h = value.get<double>();
    else if (key == "objects_min") s.objects_min = value.get<int>();
    else if (key == "objects_max") s.objects_max = value.get<int>();
    else if (key == "tokens_min") s.tokens_min = value.get<int>();
    else if (key == "tokens_max") s.tokens_max = value.get<int>();
    else if (key == "layout") s.layout = value.get<std::string>();
    else if (key == "feature_dim") s.feature_dim = value.get<int>();
    else if (key == "answer_tokens") s.answer_tokens = value.get<int>();
    else if (key == "answers_per_example") s.answers_per_example = value.get<int>();
    else if (key == "ask_all_objects") s.ask_all_objects = value.get<bool>();
    else if (key == "annotator_noise") s.annotator_noise = value.get<double>();
    else if (key == "duplicate_jitter_px") s.duplicate_jitter_px = value.get<double>();
    else if (key == "train_frac") s.train_frac = value.get<double>();
    else if (key == "val_frac") s.val_frac = value.get<double>();
    else if (key == "test_frac") s.test_frac = value.get<double>();
    else if (key == "object_labels") s.object_labels = value.get<std::vector<std::string>>();
    else if (key == "token_words") s.token_words = value.get<std::vector<std::string>>();
    else throw DataError("synth spec: unknown key " + key);
  }
  validate_spec(s);
  return s;
}

std::string synth_spec_to_json(const SynthSpec& s) {
  json j;
  j["scenes"] = s.scenes;
  j["image_w"] = s.image_w;
  j["image_h"] = s.image_h;
  j["objects_min"] = s.objects_min;
  j["objects_max"] = s.objects_max;
  j["tokens_min"] = s.tokens_min;
  j["tokens_max"] = s.tokens_max;
  j["layout"] = s.layout;
  j["feature_dim"] = s.feature_dim;
  j["answer_tokens"] = s.answer_tokens;
  j["answers_per_example"] = s.answers_per_example;
  j["ask_all_objects"] = s.ask_all_objects;
  j["annotator_noise"] = s.annotator_noise;
  j["duplicate_jitter_px"] = s.duplicate_jitter_px;
  j["train_frac"] = s.train_frac;
  j["val_frac"] = s.val_frac;
  j["test_frac"] = s.test_frac;
  if (!s.object_labels.empty()) j["object_labels"] = s.object_labels;
  if (!s.token_words.empty()) j["token_words"] = s.token_words;
  return j.dump(2) + "\n";
}

DatasetSummary write_dataset(uint64_t seed, const SynthSpec& spec,
                             const std::string& out_dir) {
  const auto generated = synth_generate(seed, spec);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create output directory: " + out_dir);

  DatasetSummary summary;
  summary.scene_count = static_cast<int>(generated.size());
  const int n = summary.scene_count;
  const int n_train = static_cast<int>(spec.train_frac * n + 0.5);
  const int n_val = std::min(n - n_train, static_cast<int>(spec.val_frac * n + 0.5));

  Manifest manifest;
  for (int i = 0; i < n; ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "scene_%05d.scene.json", i);
    save_scene_file(generated[i].scene, out_dir + "/" + name);
    summary.total_objects += static_cast<int>(generated[i].scene.objects.size());
    summary.total_tokens += static_cast<int>(generated[i].scene.tokens.size());
    if (i < n_train) manifest.train.emplace_back(name);
    else if (i < n_train + n_val) manifest.val.emplace_back(name);
    else manifest.test.emplace_back(name);
  }
  summary.train_count = static_cast<int>(manifest.train.size());
  summary.val_count = static_cast<int>(manifest.val.size());
  summary.test_count = static_cast<int>(manifest.test.size());
  save_manifest(manifest, out_dir + "/manifest.json");
  return summary;
}

}  // namespace ssgn
