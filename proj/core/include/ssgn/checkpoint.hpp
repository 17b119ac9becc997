#ifndef SSGN_CHECKPOINT_HPP
#define SSGN_CHECKPOINT_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ssgn/nn.hpp"
#include "ssgn/optim.hpp"

namespace ssgn {

/// Self-contained training snapshot: step counter, the effective run config
/// text, the answer vocabulary, all named parameters, and optimizer moments.
/// On disk: little-endian binary starting with magic "SSGN" and a format
/// version; parameters sorted by name.
struct Checkpoint {
  long long step = 0;
  std::string config_text;
  std::vector<std::string> vocab_words;
  std::map<std::string, TensorPtr> params;
  bool has_adam = false;
  long long adam_step = 0;
  std::map<std::string, Adam::Moments> adam_moments;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace ssgn

#endif  // SSGN_CHECKPOINT_HPP
