#ifndef SSGN_METRICS_HPP
#define SSGN_METRICS_HPP

#include <string>
#include <vector>

#include "ssgn/graph.hpp"

namespace ssgn {

/// Lowercases, strips leading/trailing punctuation and whitespace, and
/// collapses internal whitespace runs to single spaces.
std::string normalize_answer(const std::string& s);

/// Unit-cost edit distance over Unicode scalar values.
int levenshtein(const std::string& a, const std::string& b);

/// Normalized Levenshtein similarity with the 0.5 cutoff: values below it
/// score 0. Inputs are normalized first; two empty strings score 1.
double anls(const std::string& pred, const std::string& gold);

/// With 10 gold answers, leave-one-out soft accuracy: the mean over the ten
/// nine-answer subsets of min(matches / 3, 1). With fewer golds, exact-match
/// mean. Matching compares normalized strings.
double vqa_accuracy(const std::string& pred, const std::vector<std::string>& golds);

struct ExampleRef {
  std::string id;  // "<scene file>#<example ordinal>"
  std::string question;
  std::vector<std::string> golds;
};

struct ExampleResult {
  std::string id;
  std::string question;
  std::string prediction;
  std::vector<std::string> golds;
  double acc = 0.0;
  double anls = 0.0;
};

struct SparsitySummary {
  double otsg = 0.0;  // dataset-mean pruned-edge ratios per graph
  double osg = 0.0;
  double tsg = 0.0;
};

struct EvalReport {
  std::vector<ExampleResult> examples;
  double mean_acc = 0.0;
  double mean_anls = 0.0;
  SparsitySummary sparsity;

  std::string to_json() const;
  std::string to_table() const;
};

/// Mean of the per-scene pruned-edge ratios for each graph; the two
/// object-token directions pool into one ratio per scene.
SparsitySummary dataset_sparsity(const std::vector<Scene>& scenes,
                                 const PruneConfig& prune);

/// Scores one prediction per dataset example (id-keyed): per-example acc is
/// vqa_accuracy, anls the max over golds; aggregates are the means over
/// examples in dataset order. A missing prediction is an error naming the
/// example.
EvalReport evaluate(const std::vector<std::pair<std::string, std::string>>& predictions,
                    const std::vector<ExampleRef>& dataset,
                    const SparsitySummary& sparsity);

}  // namespace ssgn

#endif  // SSGN_METRICS_HPP
