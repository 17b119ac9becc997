#include "ssgn/scene.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "ssgn/error.hpp"

namespace ssgn {

namespace {

using json = nlohmann::ordered_json;

json entity_to_json(const Entity& e) {
  json j;
  j["id"] = e.id;
  j["label"] = e.label;
  j["box"] = {e.box.x_tl, e.box.y_tl, e.box.x_br, e.box.y_br};
  j["feature"] = e.feature;
  return j;
}

Entity entity_from_json(const json& j, EntityKind kind, const std::string& where) {
  Entity e;
  e.kind = kind;
  if (!j.contains("id") || !j.contains("label") || !j.contains("box")) {
    throw DataError("scene: " + where + " entry missing id/label/box");
  }
  e.id = j.at("id").get<int>();
  e.label = j.at("label").get<std::string>();
  const auto& b = j.at("box");
  if (!b.is_array() || b.size() != 4) {
    throw DataError("scene: " + where + " box must be [x_tl,y_tl,x_br,y_br]");
  }
  e.box = BoundingBox(b[0].get<double>(), b[1].get<double>(),
                      b[2].get<double>(), b[3].get<double>());
  if (j.contains("feature")) e.feature = j.at("feature").get<std::vector<double>>();
  return e;
}

// Clamps a box to [0,w]x[0,h]; returns true when anything moved.
bool clamp_box(BoundingBox& box, double w, double h) {
  const BoundingBox before = box;
  box = BoundingBox(std::clamp(box.x_tl, 0.0, w), std::clamp(box.y_tl, 0.0, h),
                    std::clamp(box.x_br, 0.0, w), std::clamp(box.y_br, 0.0, h));
  return !(box == before);
}

}  // namespace

LoadResult load_scene(const std::string& json_text, const SceneLimits& limits) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("scene: malformed JSON: ") + e.what());
  }
  if (!j.contains("version") || j.at("version").get<std::string>() != "1") {
    throw DataError("scene: missing or unsupported version (want \"1\")");
  }
  LoadResult out;
  Scene& s = out.scene;
  if (!j.contains("image") || !j.at("image").contains("w") || !j.at("image").contains("h")) {
    throw DataError("scene: missing image.w/image.h");
  }
  s.image_width = j.at("image").at("w").get<double>();
  s.image_height = j.at("image").at("h").get<double>();
  if (s.image_width <= 0.0 || s.image_height <= 0.0) {
    throw DataError("scene: image dimensions must be positive");
  }

  const auto read_entities = [&](const char* field, EntityKind kind, int cap) {
    std::vector<Entity> list;
    if (!j.contains(field)) return list;
    const auto& arr = j.at(field);
    if (!arr.is_array()) throw DataError(std::string("scene: ") + field + " must be an array");
    if (static_cast<int>(arr.size()) > cap) {
      throw DataError(std::string("scene: ") + field + " has " +
                      std::to_string(arr.size()) + " entries, cap is " +
                      std::to_string(cap));
    }
    for (const auto& ej : arr) {
      Entity e = entity_from_json(ej, kind, field);
      if (clamp_box(e.box, s.image_width, s.image_height)) ++out.clamp_warnings;
      list.push_back(std::move(e));
    }
    return list;
  };
  s.objects = read_entities("objects", EntityKind::object, limits.max_objects);
  s.tokens = read_entities("tokens", EntityKind::token, limits.max_tokens);

  if (j.contains("examples")) {
    for (const auto& ex : j.at("examples")) {
      QAExample qa;
      qa.question = ex.at("question").get<std::vector<std::string>>();
      qa.answers = ex.at("answers").get<std::vector<std::string>>();
      if (qa.question.empty()) throw DataError("scene: example with empty question");
      if (qa.answers.empty() || qa.answers.size() > 10) {
        throw DataError("scene: example needs 1..10 answers");
      }
      for (const auto& a : qa.answers) {
        if (a.empty()) throw DataError("scene: empty answer string");
      }
      s.examples.push_back(std::move(qa));
    }
  }
  return out;
}

std::string save_scene(const Scene& scene) {
  json j;
  j["version"] = "1";
  j["image"] = {{"w", scene.image_width}, {"h", scene.image_height}};
  j["objects"] = json::array();
  for (const auto& e : scene.objects) j["objects"].push_back(entity_to_json(e));
  j["tokens"] = json::array();
  for (const auto& e : scene.tokens) j["tokens"].push_back(entity_to_json(e));
  j["examples"] = json::array();
  for (const auto& ex : scene.examples) {
    j["examples"].push_back({{"question", ex.question}, {"answers", ex.answers}});
  }
  return j.dump(2) + "\n";
}

Scene load_scene_file(const std::string& path, const SceneLimits& limits,
                      int* clamp_warnings) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open scene file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  LoadResult r = load_scene(buf.str(), limits);
  if (clamp_warnings) *clamp_warnings = r.clamp_warnings;
  return std::move(r.scene);
}

void save_scene_file(const Scene& scene, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write scene file: " + path);
  out << save_scene(scene);
}

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest: " + path);
  json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("manifest: malformed JSON: ") + e.what());
  }
  Manifest m;
  const auto& splits = j.at("splits");
  if (splits.contains("train")) m.train = splits.at("train").get<std::vector<std::string>>();
  if (splits.contains("val")) m.val = splits.at("val").get<std::vector<std::string>>();
  if (splits.contains("test")) m.test = splits.at("test").get<std::vector<std::string>>();
  return m;
}

void save_manifest(const Manifest& manifest, const std::string& path) {
  json j;
  j["version"] = "1";
  j["splits"] = {{"train", manifest.train}, {"val", manifest.val}, {"test", manifest.test}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write manifest: " + path);
  out << j.dump(2) << "\n";
}

std::vector<Scene> load_split(const std::string& data_dir, const Manifest& manifest,
                              const std::string& split, const SceneLimits& limits) {
  const std::vector<std::string>* names = nullptr;
  if (split == "train") names = &manifest.train;
  else if (split == "val") names = &manifest.val;
  else if (split == "test") names = &manifest.test;
  else throw DataError("unknown split: " + split);
  std::vector<Scene> scenes;
  scenes.reserve(names->size());
  for (const auto& name : *names) {
    scenes.push_back(load_scene_file(data_dir + "/" + name, limits));
  }
  return scenes;
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(const std::vector<std::string>& words) {
  for (const char* r : {"<pad>", "<begin>", "<end>", "<unk>"}) add(r);
  for (const auto& w : words) add(w);
}

const std::string& Vocabulary::word(int index) const {
  if (index < 0 || index >= size()) throw DataError("vocabulary index out of range");
  return words_[index];
}

int Vocabulary::index(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(const std::string& word) const {
  return index_.count(word) != 0;
}

int Vocabulary::add(const std::string& word) {
  auto it = index_.find(word);
  if (it != index_.end()) return it->second;
  const int idx = size();
  words_.push_back(word);
  index_.emplace(word, idx);
  return idx;
}

Vocabulary build_vocabulary(const std::vector<Scene>& scenes) {
  Vocabulary vocab;
  const auto add_words = [&](const std::string& text) {
    std::istringstream ss(text);
    std::string w;
    while (ss >> w) vocab.add(w);
  };
  for (const auto& s : scenes) {
    for (const auto& ex : s.examples) {
      for (const auto& w : ex.question) vocab.add(w);
      for (const auto& a : ex.answers) add_words(a);
    }
  }
  return vocab;
}

}  // namespace ssgn
