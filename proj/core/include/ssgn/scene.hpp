#ifndef SSGN_SCENE_HPP
#define SSGN_SCENE_HPP

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "ssgn/geometry.hpp"

namespace ssgn {

enum class EntityKind { object, token };

/// A detected visual entity: an object region or an OCR token. `label` is
/// the object class name or the token text; `feature` is the synthetic
/// appearance vector standing in for detector/FastText/PHOC features.
struct Entity {
  int id = 0;
  EntityKind kind = EntityKind::object;
  BoundingBox box;
  std::string label;
  std::vector<double> feature;
};

struct QAExample {
  std::vector<std::string> question;  // word list, truncated to K on use
  std::vector<std::string> answers;   // 1..10 ground-truth strings
};

struct Scene {
  double image_width = 0.0;
  double image_height = 0.0;
  std::vector<Entity> objects;
  std::vector<Entity> tokens;
  std::vector<QAExample> examples;

  double diagonal() const { return std::hypot(image_width, image_height); }
};

/// Caps and schema checks applied on load.
struct SceneLimits {
  int max_objects = 100;  // N
  int max_tokens = 50;    // M
};

struct LoadResult {
  Scene scene;
  int clamp_warnings = 0;  // boxes clamped to image bounds
};

LoadResult load_scene(const std::string& json_text, const SceneLimits& limits = {});
std::string save_scene(const Scene& scene);

Scene load_scene_file(const std::string& path, const SceneLimits& limits = {},
                      int* clamp_warnings = nullptr);
void save_scene_file(const Scene& scene, const std::string& path);

/// Split membership for a dataset directory of *.scene.json files.
struct Manifest {
  std::vector<std::string> train;  // file names relative to the dataset dir
  std::vector<std::string> val;
  std::vector<std::string> test;
};

Manifest load_manifest(const std::string& path);
void save_manifest(const Manifest& manifest, const std::string& path);

/// Loads every scene of one split ("train", "val" or "test").
std::vector<Scene> load_split(const std::string& data_dir, const Manifest& manifest,
                              const std::string& split, const SceneLimits& limits = {});

/// Fixed answer vocabulary with reserved control words at the front.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBegin = 1;
  static constexpr int kEnd = 2;
  static constexpr int kUnk = 3;

  Vocabulary();
  explicit Vocabulary(const std::vector<std::string>& words);

  int size() const { return static_cast<int>(words_.size()); }
  const std::string& word(int index) const;
  int index(const std::string& word) const;  // kUnk when absent
  bool contains(const std::string& word) const;
  const std::vector<std::string>& words() const { return words_; }

  /// Appends `word` if absent; returns its index either way.
  int add(const std::string& word);

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

/// Vocabulary over the question words and answer words of the given scenes
/// (answers split on whitespace), in first-seen order after the reserved
/// entries.
Vocabulary build_vocabulary(const std::vector<Scene>& scenes);

}  // namespace ssgn

#endif  // SSGN_SCENE_HPP
