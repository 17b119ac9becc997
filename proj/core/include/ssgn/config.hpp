#ifndef SSGN_CONFIG_HPP
#define SSGN_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ssgn/graph.hpp"
#include "ssgn/model.hpp"

namespace ssgn {

/// Everything a run needs, parsed from `key = value` lines ('#' comments).
/// Unknown keys are rejected; the effective config serializes back to the
/// same format for echoing into output directories and checkpoints.
struct RunConfig {
  uint64_t seed = 1;
  std::string data_dir;
  std::string out_dir;
  std::string resume;  // checkpoint to continue from, empty for fresh runs

  ModelConfig model;
  PruneConfig prune;

  double lr = 1e-4;
  double lr_decay = 0.1;
  std::vector<long long> milestones = {10000, 21000};
  double lambda = 1.0;  // policy-gradient weight in the total loss
  long long steps = 2000;
  long long eval_every = 200;

  /// Applies one key/value pair; unknown key or unparseable value throws.
  void set(const std::string& key, const std::string& value);

  /// Applies every `key = value` line of the text on top of current values.
  void apply_text(const std::string& text);

  std::string serialize() const;

  static RunConfig from_text(const std::string& text);
  static RunConfig from_file(const std::string& path);
};

}  // namespace ssgn

#endif  // SSGN_CONFIG_HPP
