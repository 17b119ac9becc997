#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "ssgn/error.hpp"
#include "ssgn/scene.hpp"

namespace fs = std::filesystem;
using ssgn::Scene;

namespace {

std::string with_tokens(int count) {
  std::string toks;
  for (int i = 0; i < count; ++i) {
    if (i) toks += ",";
    toks += R"({"id":)" + std::to_string(100 + i) +
            R"(,"label":"w","box":[0,0,5,5],"feature":[0.1]})";
  }
  return R"({"version":"1","image":{"w":100,"h":100},)"
         R"("objects":[{"id":0,"label":"menu","box":[0,0,10,10],"feature":[0.5]}],)"
         R"("tokens":[)" +
         toks + R"(],"examples":[{"question":["what"],"answers":["w"]}]})";
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("ssgn_scene_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("scene round trip is identity and byte stable") {
  const Scene s = oracles::tiny_scene();
  const std::string bytes = ssgn::save_scene(s);
  const auto r = ssgn::load_scene(bytes);
  CHECK(r.clamp_warnings == 0);
  const Scene& t = r.scene;
  CHECK(t.image_width == s.image_width);
  CHECK(t.image_height == s.image_height);
  REQUIRE(t.objects.size() == s.objects.size());
  REQUIRE(t.tokens.size() == s.tokens.size());
  for (size_t i = 0; i < s.objects.size(); ++i) {
    CHECK(t.objects[i].id == s.objects[i].id);
    CHECK(t.objects[i].kind == ssgn::EntityKind::object);
    CHECK(t.objects[i].box == s.objects[i].box);
    CHECK(t.objects[i].label == s.objects[i].label);
    CHECK(t.objects[i].feature == s.objects[i].feature);
  }
  for (size_t i = 0; i < s.tokens.size(); ++i) {
    CHECK(t.tokens[i].id == s.tokens[i].id);
    CHECK(t.tokens[i].kind == ssgn::EntityKind::token);
    CHECK(t.tokens[i].box == s.tokens[i].box);
    CHECK(t.tokens[i].label == s.tokens[i].label);
    CHECK(t.tokens[i].feature == s.tokens[i].feature);
  }
  REQUIRE(t.examples.size() == s.examples.size());
  CHECK(t.examples[0].question == s.examples[0].question);
  CHECK(t.examples[0].answers == s.examples[0].answers);
  CHECK(ssgn::save_scene(t) == bytes);
}

TEST_CASE("out-of-bounds box is clamped with a warning") {
  const std::string text =
      R"({"version":"1","image":{"w":100,"h":100},)"
      R"("objects":[{"id":0,"label":"a","box":[90,90,120,95],"feature":[0.0]}],)"
      R"("tokens":[],"examples":[]})";
  const auto r = ssgn::load_scene(text);
  CHECK(r.clamp_warnings == 1);
  CHECK(r.scene.objects[0].box == ssgn::BoundingBox(90, 90, 100, 95));
}

TEST_CASE("token cap error names the offending field") {
  CHECK_NOTHROW(ssgn::load_scene(with_tokens(50)));
  try {
    ssgn::load_scene(with_tokens(51));
    FAIL("expected DataError");
  } catch (const ssgn::DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("tokens") != std::string::npos);
    CHECK(msg.find("51") != std::string::npos);
  }
  ssgn::SceneLimits tight;
  tight.max_tokens = 3;
  CHECK_THROWS_AS(ssgn::load_scene(with_tokens(4), tight), ssgn::DataError);
}

TEST_CASE("schema violations are rejected") {
  CHECK_THROWS_AS(ssgn::load_scene("not json at all"), ssgn::DataError);
  CHECK_THROWS_AS(ssgn::load_scene(R"({"version":"2","image":{"w":1,"h":1}})"), ssgn::DataError);
  CHECK_THROWS_AS(ssgn::load_scene(R"({"image":{"w":1,"h":1}})"), ssgn::DataError);
  CHECK_THROWS_AS(ssgn::load_scene(R"({"version":"1"})"), ssgn::DataError);
  CHECK_THROWS_AS(ssgn::load_scene(R"({"version":"1","image":{"w":0,"h":5}})"), ssgn::DataError);
  CHECK_THROWS_AS(
      ssgn::load_scene(
          R"({"version":"1","image":{"w":9,"h":9},"objects":[{"id":0,"label":"a"}]})"),
      ssgn::DataError);
  CHECK_THROWS_AS(
      ssgn::load_scene(
          R"({"version":"1","image":{"w":9,"h":9},)"
          R"("objects":[{"id":0,"label":"a","box":[0,0,1],"feature":[]}]})"),
      ssgn::DataError);
  CHECK_THROWS_AS(
      ssgn::load_scene(R"({"version":"1","image":{"w":9,"h":9},)"
                       R"("examples":[{"question":[],"answers":["x"]}]})"),
      ssgn::DataError);
  CHECK_THROWS_AS(
      ssgn::load_scene(R"({"version":"1","image":{"w":9,"h":9},)"
                       R"("examples":[{"question":["q"],"answers":[]}]})"),
      ssgn::DataError);
  CHECK_THROWS_AS(
      ssgn::load_scene(R"({"version":"1","image":{"w":9,"h":9},)"
                       R"("examples":[{"question":["q"],"answers":[""]}]})"),
      ssgn::DataError);
}

TEST_CASE("scene files and manifest round trip through a dataset dir") {
  TempDir dir;
  const Scene s = oracles::tiny_scene();
  const auto p0 = (dir.path / "a.scene.json").string();
  const auto p1 = (dir.path / "b.scene.json").string();
  ssgn::save_scene_file(s, p0);
  ssgn::save_scene_file(s, p1);

  int warnings = -1;
  const Scene back = ssgn::load_scene_file(p0, {}, &warnings);
  CHECK(warnings == 0);
  CHECK(ssgn::save_scene(back) == ssgn::save_scene(s));

  ssgn::Manifest m;
  m.train = {"a.scene.json"};
  m.val = {"b.scene.json"};
  const auto mpath = (dir.path / "manifest.json").string();
  ssgn::save_manifest(m, mpath);
  const ssgn::Manifest m2 = ssgn::load_manifest(mpath);
  CHECK(m2.train == m.train);
  CHECK(m2.val == m.val);
  CHECK(m2.test.empty());

  const auto train = ssgn::load_split(dir.path.string(), m2, "train");
  CHECK(train.size() == 1);
  const auto val = ssgn::load_split(dir.path.string(), m2, "val");
  CHECK(val.size() == 1);
  CHECK(ssgn::load_split(dir.path.string(), m2, "test").empty());
  CHECK_THROWS_AS(ssgn::load_split(dir.path.string(), m2, "dev"), ssgn::DataError);
  CHECK_THROWS_AS(ssgn::load_scene_file((dir.path / "missing.json").string()),
                  ssgn::DataError);
}

TEST_CASE("vocabulary reserves control words and maps both ways") {
  ssgn::Vocabulary v;
  CHECK(v.size() == 4);
  CHECK(v.word(ssgn::Vocabulary::kPad) == "<pad>");
  CHECK(v.word(ssgn::Vocabulary::kBegin) == "<begin>");
  CHECK(v.word(ssgn::Vocabulary::kEnd) == "<end>");
  CHECK(v.word(ssgn::Vocabulary::kUnk) == "<unk>");
  CHECK(v.index("nope") == ssgn::Vocabulary::kUnk);
  CHECK_FALSE(v.contains("exit"));
  const int i = v.add("exit");
  CHECK(i == 4);
  CHECK(v.add("exit") == 4);
  CHECK(v.index("exit") == 4);
  CHECK(v.contains("exit"));
  CHECK_THROWS_AS(v.word(99), ssgn::DataError);
}

TEST_CASE("build_vocabulary covers question and answer words in first-seen order") {
  Scene s = oracles::tiny_scene();
  s.examples[0].answers.push_back("open now");
  const ssgn::Vocabulary v = ssgn::build_vocabulary({s});
  CHECK(v.index("what") == 4);
  CHECK(v.index("does") == 5);
  CHECK(v.index("menu") == 6);
  CHECK(v.contains("stop"));
  CHECK(v.contains("open"));
  CHECK(v.contains("now"));
  CHECK(v.index("sale") == ssgn::Vocabulary::kUnk);
}
