#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <vector>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

struct CliDir {
  fs::path root;
  CliDir() {
    root = fs::path("/tmp") / ("ssgn_cli_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~CliDir() { fs::remove_all(root); }
  std::string path(const std::string& rel) const { return (root / rel).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE_MESSAGE(bool(f), "missing file " << path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

CliResult run_cli(const CliDir& dir, const std::string& args,
                  const std::string& env = "") {
  const std::string err_path = dir.path("stderr.txt");
  std::string cmd = "env -u SSGN_SEED " + env + " " + std::string(SSGN_CLI_PATH) + " " +
                    args + " 2>" + err_path;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CliResult result;
  char buf[4096];
  size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof(buf), pipe)) > 0) result.out.append(buf, n);
  const int status = ::pclose(pipe);
  result.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.err = slurp(err_path);
  return result;
}

const char* kTinySpec = R"({
  "scenes": 4,
  "layout": "signs-grid",
  "feature_dim": 8,
  "objects_min": 2,
  "objects_max": 2,
  "tokens_min": 2,
  "tokens_max": 2,
  "object_labels": ["menu", "board"],
  "token_words": ["stop", "sale", "open", "fresh"],
  "train_frac": 0.5,
  "val_frac": 0.5,
  "test_frac": 0.0
})";

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  REQUIRE(bool(f));
  f << text;
}

std::string make_dataset(const CliDir& dir, const std::string& name,
                         const std::string& seed_args) {
  write_text(dir.path("spec.json"), kTinySpec);
  const std::string data = dir.path(name);
  const CliResult r =
      run_cli(dir, "synth --spec " + dir.path("spec.json") + " --out " + data + " " +
                       seed_args);
  REQUIRE_MESSAGE(r.code == 0, r.err);
  return data;
}

bool trees_identical(const fs::path& a, const fs::path& b) {
  std::vector<std::string> rel_a, rel_b;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.is_regular_file()) rel_a.push_back(fs::relative(e.path(), a).string());
  }
  for (const auto& e : fs::recursive_directory_iterator(b)) {
    if (e.is_regular_file()) rel_b.push_back(fs::relative(e.path(), b).string());
  }
  std::sort(rel_a.begin(), rel_a.end());
  std::sort(rel_b.begin(), rel_b.end());
  if (rel_a != rel_b) return false;
  for (const std::string& rel : rel_a) {
    if (slurp((a / rel).string()) != slurp((b / rel).string())) return false;
  }
  return true;
}

// one "error: ..." line on stderr, nothing else
void check_error_line(const CliResult& r) {
  CHECK(r.err.rfind("error: ", 0) == 0);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  CHECK(r.err.back() == '\n');
}

}  // namespace

TEST_CASE("cli usage errors exit 1 and --help exits 0") {
  CliDir dir;
  CHECK(run_cli(dir, "--help").code == 0);
  CHECK(run_cli(dir, "synth --help").code == 0);

  CliResult r = run_cli(dir, "warp --x 1");
  CHECK(r.code == 1);
  check_error_line(r);

  r = run_cli(dir, "prune");  // missing required --scene
  CHECK(r.code == 1);
  check_error_line(r);

  r = run_cli(dir, "prune --scene s.json --graph sideways");
  CHECK(r.code == 1);
  check_error_line(r);

  r = run_cli(dir, "");
  CHECK(r.code == 1);
}

TEST_CASE("cli synth writes a dataset and reruns byte-identically") {
  CliDir dir;
  write_text(dir.path("spec.json"), kTinySpec);
  const CliResult first = run_cli(
      dir, "synth --spec " + dir.path("spec.json") + " --out " + dir.path("d1") +
               " --seed 11");
  REQUIRE_MESSAGE(first.code == 0, first.err);
  CHECK(first.out.find("wrote 4 scenes") != std::string::npos);
  CHECK(first.out.find("train 2 / val 2 / test 0") != std::string::npos);
  CHECK(first.out.find("objects/scene: 2 x4") != std::string::npos);
  CHECK(fs::exists(dir.path("d1/manifest.json")));
  CHECK(fs::exists(dir.path("d1/scene_00000.scene.json")));

  const CliResult again = run_cli(
      dir, "synth --spec " + dir.path("spec.json") + " --out " + dir.path("d2") +
               " --seed 11");
  REQUIRE(again.code == 0);
  CHECK(trees_identical(dir.path("d1"), dir.path("d2")));

  const CliResult other = run_cli(
      dir, "synth --spec " + dir.path("spec.json") + " --out " + dir.path("d3") +
               " --seed 12");
  REQUIRE(other.code == 0);
  CHECK_FALSE(trees_identical(dir.path("d1"), dir.path("d3")));

  const CliResult missing =
      run_cli(dir, "synth --spec " + dir.path("nope.json") + " --out " + dir.path("d4"));
  CHECK(missing.code == 2);
  check_error_line(missing);
}

TEST_CASE("cli SSGN_SEED is the fallback seed, flags win") {
  CliDir dir;
  write_text(dir.path("spec.json"), kTinySpec);
  const std::string spec = dir.path("spec.json");

  REQUIRE(run_cli(dir, "synth --spec " + spec + " --out " + dir.path("flag") +
                           " --seed 11")
              .code == 0);
  REQUIRE(run_cli(dir, "synth --spec " + spec + " --out " + dir.path("env"),
                  "SSGN_SEED=11")
              .code == 0);
  CHECK(trees_identical(dir.path("flag"), dir.path("env")));

  // explicit flag beats the environment
  REQUIRE(run_cli(dir, "synth --spec " + spec + " --out " + dir.path("both") +
                           " --seed 11",
                  "SSGN_SEED=99")
              .code == 0);
  CHECK(trees_identical(dir.path("flag"), dir.path("both")));

  const CliResult bad = run_cli(dir, "synth --spec " + spec + " --out " + dir.path("x"),
                                "SSGN_SEED=eleven");
  CHECK(bad.code == 2);
  check_error_line(bad);
}

TEST_CASE("cli prune exports graphs with stats, export-graph without") {
  CliDir dir;
  make_dataset(dir, "data", "--seed 11");
  const std::string scene = dir.path("data/scene_00000.scene.json");

  const CliResult all = run_cli(dir, "prune --scene " + scene + " --graph all --out " +
                                         dir.path("g"));
  REQUIRE_MESSAGE(all.code == 0, all.err);
  CHECK(all.out.find("sparsity ratio:") != std::string::npos);
  CHECK(fs::exists(dir.path("g/scene_00000.otsg.json")));
  CHECK(fs::exists(dir.path("g/scene_00000.osg.json")));
  CHECK(fs::exists(dir.path("g/scene_00000.tsg.json")));
  CHECK(fs::exists(dir.path("g/config.txt")));
  // overrides flow into the echoed config
  const CliResult tuned =
      run_cli(dir, "prune --scene " + scene + " --set theta=0.15 --out " + dir.path("g2"));
  REQUIRE(tuned.code == 0);
  CHECK(slurp(dir.path("g2/config.txt")).find("theta = 0.15") != std::string::npos);

  const CliResult dot = run_cli(dir, "export-graph --scene " + scene +
                                         " --graph tsg --format dot --out " + dir.path("h"));
  REQUIRE(dot.code == 0);
  CHECK(dot.out.find("sparsity") == std::string::npos);
  CHECK(fs::exists(dir.path("h/scene_00000.tsg.dot")));
  CHECK(slurp(dir.path("h/scene_00000.tsg.dot")).rfind("digraph", 0) == 0);
  CHECK_FALSE(fs::exists(dir.path("h/scene_00000.otsg.dot")));

  const CliResult missing =
      run_cli(dir, "prune --scene " + dir.path("data/none.scene.json"));
  CHECK(missing.code == 2);
  check_error_line(missing);
}

TEST_CASE("cli stats summarizes a dataset") {
  CliDir dir;
  const std::string data = make_dataset(dir, "data", "--seed 11");
  const CliResult r = run_cli(dir, "stats --data " + data);
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.find("train: 2 scenes") != std::string::npos);
  CHECK(r.out.find("val: 2 scenes") != std::string::npos);
  CHECK(r.out.find("test: 0 scenes") != std::string::npos);
  CHECK(r.out.find("total: 4 scenes") != std::string::npos);
  CHECK(r.out.find("sparsity ratio:") != std::string::npos);

  CHECK(run_cli(dir, "stats --data " + dir.path("missing")).code == 2);
}

TEST_CASE("cli zero-step train writes a loadable checkpoint and empty metrics") {
  CliDir dir;
  const std::string data = make_dataset(dir, "data", "--seed 11");
  const std::string args = "train --data " + data + " --out " + dir.path("run") +
                           " --steps 0 --seed 5 --set d=8 --set heads=2 --set "
                           "max_answer_len=4 --set eval_every=2";
  const CliResult r = run_cli(dir, args);
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.find("no validation results") != std::string::npos);
  CHECK(slurp(dir.path("run/metrics.csv")) == "step,lr,bce,pg,total,val_acc,val_anls\n");
  CHECK(fs::exists(dir.path("run/last.ckpt")));
  CHECK(slurp(dir.path("run/config.txt")).find("d = 8") != std::string::npos);

  const CliResult ev = run_cli(dir, "eval --checkpoint " + dir.path("run/last.ckpt") +
                                        " --split val --out " + dir.path("ev"));
  REQUIRE_MESSAGE(ev.code == 0, ev.err);
  CHECK(fs::exists(dir.path("ev/report.json")));
  CHECK(fs::exists(dir.path("ev/predictions.json")));
}

TEST_CASE("cli train and eval rerun deterministically") {
  CliDir dir;
  const std::string data = make_dataset(dir, "data", "--seed 11");
  const std::string common = "train --data " + data +
                             " --steps 6 --seed 5 --set d=8 --set heads=2 --set "
                             "max_answer_len=4 --set eval_every=3 --out " +
                             dir.path("r1");
  REQUIRE(run_cli(dir, common).code == 0);
  const std::string metrics1 = slurp(dir.path("r1/metrics.csv"));
  const std::string last1 = slurp(dir.path("r1/last.ckpt"));
  const std::string best1 = slurp(dir.path("r1/best.ckpt"));
  fs::remove_all(dir.path("r1"));
  REQUIRE(run_cli(dir, common).code == 0);
  CHECK(slurp(dir.path("r1/metrics.csv")) == metrics1);
  CHECK(slurp(dir.path("r1/last.ckpt")) == last1);
  CHECK(slurp(dir.path("r1/best.ckpt")) == best1);
  // metrics rows only for the executed steps, eval columns on the cadence
  std::stringstream rows(metrics1);
  std::string line;
  int lines = 0;
  while (std::getline(rows, line)) ++lines;
  CHECK(lines == 7);

  const std::string ev = "eval --checkpoint " + dir.path("r1/last.ckpt") +
                         " --split val --out ";
  REQUIRE(run_cli(dir, ev + dir.path("e1")).code == 0);
  REQUIRE(run_cli(dir, ev + dir.path("e2")).code == 0);
  CHECK(slurp(dir.path("e1/report.json")) == slurp(dir.path("e2/report.json")));
  CHECK(slurp(dir.path("e1/predictions.json")) == slurp(dir.path("e2/predictions.json")));

  const CliResult missing = run_cli(dir, "eval --checkpoint " + dir.path("r9/last.ckpt") +
                                             " --split val --out " + dir.path("e3"));
  CHECK(missing.code == 2);
  check_error_line(missing);
}

TEST_CASE("cli numeric failures exit 3") {
  CliDir dir;
  const std::string data = make_dataset(dir, "data", "--seed 11");
  const CliResult r = run_cli(
      dir, "train --data " + data + " --out " + dir.path("run") +
               " --steps 3 --seed 5 --set d=8 --set heads=2 --set lr=nan");
  CHECK(r.code == 3);
  check_error_line(r);
}
