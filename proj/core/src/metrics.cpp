#include "ssgn/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <json.hpp>
#include <map>
#include <sstream>

#include "ssgn/error.hpp"

namespace ssgn {

std::string normalize_answer(const std::string& s) {
  std::string lower;
  lower.reserve(s.size());
  for (unsigned char c : s) lower += static_cast<char>(std::tolower(c));

  size_t begin = 0, end = lower.size();
  auto strippable = [&](size_t i) {
    const unsigned char c = lower[i];
    return std::isspace(c) || (c < 0x80 && std::ispunct(c));
  };
  while (begin < end && strippable(begin)) ++begin;
  while (end > begin && strippable(end - 1)) --end;

  std::string out;
  bool in_space = false;
  for (size_t i = begin; i < end; ++i) {
    if (std::isspace(static_cast<unsigned char>(lower[i]))) {
      in_space = true;
    } else {
      if (in_space && !out.empty()) out += ' ';
      in_space = false;
      out += lower[i];
    }
  }
  return out;
}

namespace {

/// Lenient UTF-8 decode: malformed bytes become individual code points.
std::vector<uint32_t> codepoints(const std::string& s) {
  std::vector<uint32_t> out;
  size_t i = 0;
  while (i < s.size()) {
    const unsigned char c = s[i];
    int extra = 0;
    uint32_t cp = c;
    if ((c & 0x80) == 0x00) extra = 0;
    else if ((c & 0xe0) == 0xc0) { extra = 1; cp = c & 0x1f; }
    else if ((c & 0xf0) == 0xe0) { extra = 2; cp = c & 0x0f; }
    else if ((c & 0xf8) == 0xf0) { extra = 3; cp = c & 0x07; }
    bool valid = true;
    for (int k = 1; k <= extra; ++k) {
      if (i + k >= s.size() || (static_cast<unsigned char>(s[i + k]) & 0xc0) != 0x80) {
        valid = false;
        break;
      }
    }
    if (extra == 0 || !valid) {
      out.push_back(c);
      i += 1;
      continue;
    }
    for (int k = 1; k <= extra; ++k) {
      cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3f);
    }
    out.push_back(cp);
    i += extra + 1;
  }
  return out;
}

}  // namespace

int levenshtein(const std::string& a, const std::string& b) {
  const auto ca = codepoints(a), cb = codepoints(b);
  const size_t n = ca.size(), m = cb.size();
  std::vector<int> prev(m + 1), cur(m + 1);
  for (size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<int>(i);
    for (size_t j = 1; j <= m; ++j) {
      const int sub = prev[j - 1] + (ca[i - 1] == cb[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double anls(const std::string& pred, const std::string& gold) {
  const std::string p = normalize_answer(pred), g = normalize_answer(gold);
  const size_t lp = codepoints(p).size(), lg = codepoints(g).size();
  if (lp == 0 && lg == 0) return 1.0;
  const double s =
      1.0 - static_cast<double>(levenshtein(p, g)) / static_cast<double>(std::max(lp, lg));
  return s >= 0.5 ? s : 0.0;
}

double vqa_accuracy(const std::string& pred, const std::vector<std::string>& golds) {
  if (golds.empty()) throw DataError("vqa_accuracy: empty gold list");
  const std::string p = normalize_answer(pred);
  std::vector<int> match(golds.size());
  int matches = 0;
  for (size_t i = 0; i < golds.size(); ++i) {
    match[i] = normalize_answer(golds[i]) == p;
    matches += match[i];
  }
  if (golds.size() == 10) {
    double total = 0.0;
    for (size_t leave = 0; leave < 10; ++leave) {
      const int subset_matches = matches - match[leave];
      total += std::min(subset_matches / 3.0, 1.0);
    }
    return total / 10.0;
  }
  return static_cast<double>(matches) / static_cast<double>(golds.size());
}

EvalReport evaluate(const std::vector<std::pair<std::string, std::string>>& predictions,
                    const std::vector<ExampleRef>& dataset,
                    const SparsitySummary& sparsity) {
  std::map<std::string, std::string> by_id(predictions.begin(), predictions.end());
  EvalReport report;
  report.sparsity = sparsity;
  for (const ExampleRef& ex : dataset) {
    auto it = by_id.find(ex.id);
    if (it == by_id.end()) {
      throw DataError("evaluate: missing prediction for example " + ex.id);
    }
    ExampleResult r;
    r.id = ex.id;
    r.question = ex.question;
    r.prediction = it->second;
    r.golds = ex.golds;
    r.acc = vqa_accuracy(r.prediction, r.golds);
    r.anls = 0.0;
    for (const std::string& gold : r.golds) r.anls = std::max(r.anls, anls(r.prediction, gold));
    report.examples.push_back(std::move(r));
  }
  if (!report.examples.empty()) {
    double acc = 0.0, a = 0.0;
    for (const ExampleResult& r : report.examples) {
      acc += r.acc;
      a += r.anls;
    }
    report.mean_acc = acc / static_cast<double>(report.examples.size());
    report.mean_anls = a / static_cast<double>(report.examples.size());
  }
  return report;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["mean_acc"] = mean_acc;
  j["mean_anls"] = mean_anls;
  j["sparsity"] = {{"otsg", sparsity.otsg}, {"osg", sparsity.osg}, {"tsg", sparsity.tsg}};
  j["examples"] = nlohmann::ordered_json::array();
  for (const ExampleResult& r : examples) {
    nlohmann::ordered_json e;
    e["id"] = r.id;
    e["question"] = r.question;
    e["prediction"] = r.prediction;
    e["golds"] = r.golds;
    e["acc"] = r.acc;
    e["anls"] = r.anls;
    j["examples"].push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

std::string EvalReport::to_table() const {
  std::ostringstream out;
  size_t id_w = 2;
  for (const ExampleResult& r : examples) id_w = std::max(id_w, r.id.size());
  char line[256];
  std::snprintf(line, sizeof(line), "%-*s  %6s  %6s  %s\n",
                static_cast<int>(id_w), "id", "acc", "anls", "prediction");
  out << line;
  for (const ExampleResult& r : examples) {
    std::snprintf(line, sizeof(line), "%-*s  %6.4f  %6.4f  %s\n",
                  static_cast<int>(id_w), r.id.c_str(), r.acc, r.anls,
                  r.prediction.c_str());
    out << line;
  }
  std::snprintf(line, sizeof(line), "%-*s  %6.4f  %6.4f\n",
                static_cast<int>(id_w), "mean", mean_acc, mean_anls);
  out << line;
  std::snprintf(line, sizeof(line), "sparsity: otsg %.4f  osg %.4f  tsg %.4f\n",
                sparsity.otsg, sparsity.osg, sparsity.tsg);
  out << line;
  return out.str();
}

SparsitySummary dataset_sparsity(const std::vector<Scene>& scenes,
                                 const PruneConfig& prune) {
  SparsitySummary summary;
  if (scenes.empty()) return summary;
  for (const Scene& scene : scenes) {
    const SceneGraphs pruned = build_scene_graphs(scene, prune);
    const auto s_to = sparsity_ratio(build_edges(scene.tokens, scene.objects),
                                     pruned.otsg_token_to_object);
    const auto s_ot = sparsity_ratio(build_edges(scene.objects, scene.tokens),
                                     pruned.otsg_object_to_token);
    const auto s_oo =
        sparsity_ratio(build_edges(scene.objects, scene.objects), pruned.osg);
    const auto s_tt = sparsity_ratio(build_edges(scene.tokens, scene.tokens), pruned.tsg);
    const long long ot_candidates = s_to.candidates + s_ot.candidates;
    summary.otsg += ot_candidates == 0 ? 0.0
                                       : static_cast<double>(s_to.pruned + s_ot.pruned) /
                                             static_cast<double>(ot_candidates);
    summary.osg += s_oo.ratio;
    summary.tsg += s_tt.ratio;
  }
  summary.otsg /= static_cast<double>(scenes.size());
  summary.osg /= static_cast<double>(scenes.size());
  summary.tsg /= static_cast<double>(scenes.size());
  return summary;
}

}  // namespace ssgn
